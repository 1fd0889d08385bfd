# Build-time switches.  Release builds set ALLOW_MUTATIONS = False so the
# CLI refuses to run deliberately broken protocol variants.
ALLOW_MUTATIONS = True
