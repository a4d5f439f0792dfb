"""Small shared helpers for building object-language test programs."""

from sessionkit.corpus import _int_list, _nested_list, _pair_list


def int_list_src(var, xs):
    return _int_list(var, xs)


def pair_list_src(var, kvs):
    return _pair_list(var, kvs)


def nested_list_src(var, xss):
    return _nested_list(var, xss)
