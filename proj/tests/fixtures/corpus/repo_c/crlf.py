x = 1


def windows_line_endings():
    return x
