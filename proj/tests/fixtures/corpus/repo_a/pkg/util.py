"""Helpers.

def not_a_function(): this lives in a docstring
"""
import re

PATTERN = re.compile(r"\w+")  # def also_not_real


def tokenize(text):
    return PATTERN.findall(text)


def count(text,
          lower=False):
    words = tokenize(text)
    if lower:
        words = [w.lower() for w in words]
    return len(words)
