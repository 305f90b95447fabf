# Module without any definitions.
WIDTH = 80
HEIGHT = [
    24,
    48,
]
NAMES = ("def", "class")
