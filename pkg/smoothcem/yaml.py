# -*- coding: utf-8 -*-
#
"""
Minimal YAML emitter for iteration traces.
"""
import sys

import numpy


def _format(value):
    if isinstance(value, numpy.generic):
        value = value.item()
    elif isinstance(value, numpy.ndarray):
        value = value.tolist()
    return "%r" % (value,)


class YamlEmitter(object):
    """Writes nested sequences and maps to a stream, one item per line."""

    def __init__(self, stream=None):
        self.stream = sys.stdout if stream is None else stream
        self.envs = []
        self.indent = 0
        self.next_indent = 0
        return

    def _write(self, text, end="\n"):
        self.stream.write(text + end)
        return

    def _push(self, env):
        if not self.envs:
            pass
        elif self.envs[-1] == "seq":
            self._write(self.indent * " " + "-", end=" ")
            self.indent += 2
            self.next_indent = 0
        elif self.envs[-1] == "map":
            self.indent += 4
            self.next_indent = self.indent
            self._write("")
        self.envs.append(env)
        return

    def _pop(self, env):
        if not self.envs or self.envs[-1] != env:
            raise ValueError("No %s to close." % env)
        self.envs.pop()
        if self.envs:
            self.indent -= 2 if self.envs[-1] == "seq" else 4
        self.next_indent = self.indent
        return

    def begin_doc(self):
        self._write("---")
        return

    def add_comment(self, comment):
        self._write(self.indent * " " + "# " + comment)
        return

    def begin_seq(self):
        self._push("seq")
        return

    def add_item(self, item):
        if not self.envs or self.envs[-1] != "seq":
            raise ValueError("Items only go into sequences.")
        self._write(self.next_indent * " " + "- " + _format(item))
        self.next_indent = self.indent
        return

    def end_seq(self):
        self._pop("seq")
        return

    def begin_map(self):
        self._push("map")
        return

    def add_key_value(self, key, value):
        if not self.envs or self.envs[-1] != "map":
            raise ValueError("Keys only go into maps.")
        self._write(self.next_indent * " " + "%s: %s" % (key, _format(value)))
        self.next_indent = self.indent
        return

    def end_map(self):
        self._pop("map")
        return
