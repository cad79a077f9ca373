from hypothesis import settings

settings.register_profile("patchlr", deadline=None, max_examples=25)
settings.load_profile("patchlr")
