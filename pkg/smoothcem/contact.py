# -*- coding: utf-8 -*-
#
"""
Contact conductance :math:`\\zeta` on the boundary of the unit square.

The traditional complete electrode model uses a box, i.e., a constant
conductance on each electrode. The smoothened model replaces it by a hat that
vanishes at the electrode ends and peaks with twice its half-height parameter
in the middle, so that both carry the same integral for equal parameters.
Profiles live in arclength space and therefore serve all refinement levels.
"""
import json

import numpy

from .errors import ContractError, ParameterError
from .mesh import ElectrodeLayout, check_arclength

KINDS = ("box", "hat", "custom")


def _unit_shape(kind, a, b, shape=None):
    if kind == "box":
        return numpy.array([a, b]), numpy.array([1.0, 1.0])
    if kind == "hat":
        return numpy.array([a, 0.5 * (a + b), b]), numpy.array([0.0, 2.0, 0.0])
    points = numpy.asarray(shape["points"], dtype=float)
    values = numpy.asarray(shape["values"], dtype=float)
    if (
        len(points) < 2
        or len(points) != len(values)
        or points[0] != 0.0
        or points[-1] != 1.0
        or numpy.any(numpy.diff(points) <= 0.0)
    ):
        raise ParameterError(
            "Custom shapes need increasing points from 0 to 1 and one value each."
        )
    if numpy.any(values < 0.0):
        raise ParameterError("Custom shape values must be nonnegative.")
    return a + points * (b - a), values


class ConductanceDerivative(object):
    """Arclength derivative of a conductance profile.

    ``smooth_part`` holds ``(s0, s1, slope, m)`` for every linear piece,
    ``delta_part`` holds ``(position, weight, m)`` for the jumps at the
    electrode ends, m being the 0-based electrode index.
    """

    def __init__(self, smooth_part, delta_part, profile=None):
        self.smooth_part = smooth_part
        self.delta_part = delta_part
        self.profile = profile
        return

    def slope(self, s):
        s = numpy.asarray(s, dtype=float)
        out = numpy.zeros(s.shape)
        for s0, s1, slope, _ in self.smooth_part:
            out[(s >= s0) & (s < s1)] = slope
        return out

    def electrode_balance(self, m):
        """Integral of the slope plus the delta weights on electrode m.

        Vanishes for every admissible profile.
        """
        total = sum((s1 - s0) * slope for s0, s1, slope, k in self.smooth_part if k == m)
        return total + sum(w for _, w, k in self.delta_part if k == m)


class ConductanceProfile(object):
    """Contact conductance as a function of arclength.

    :param layout: the electrodes.
    :param kind: ``"box"``, ``"hat"`` or ``"custom"``.
    :param heights: box heights or hat half-heights, one per electrode (a
        scalar is broadcast).
    :param shapes: for ``"custom"``, one ``{"points": ..., "values": ...}``
        per electrode with points relative to the electrode, from 0 to 1.
    :param check: require strictly positive heights and nonvanishing shapes.
        Switch off only to inspect degenerate configurations.
    """

    def __init__(self, layout, kind, heights, shapes=None, check=True):
        if kind not in KINDS:
            raise ParameterError("Unknown conductance kind %r." % kind)
        M = layout.num_electrodes
        heights = numpy.array(numpy.broadcast_to(heights, (M,)), dtype=float)
        if numpy.any(numpy.isnan(heights)) or numpy.any(heights < 0.0):
            raise ParameterError("Conductance heights must be nonnegative.")
        if check and numpy.any(heights <= 0.0):
            raise ParameterError("Conductance heights must be positive.")
        if kind == "custom" and (shapes is None or len(shapes) != M):
            raise ParameterError("Custom profiles need one shape per electrode.")

        self.layout = layout
        self.kind = kind
        self.heights = heights
        self.heights.flags.writeable = False
        self.shapes = shapes
        self._pieces = [
            _unit_shape(kind, a, b, None if shapes is None else shapes[m])
            for m, (a, b) in enumerate(layout.arcs)
        ]
        if check and any(not numpy.any(v > 0.0) for _, v in self._pieces):
            raise ParameterError("Conductance must not vanish on an electrode.")
        return

    @property
    def num_electrodes(self):
        return self.layout.num_electrodes

    def unit_shape(self, m):
        """Breakpoints and values of the shape of electrode m (0-based)."""
        return self._pieces[m]

    def breakpoints(self):
        return numpy.unique(numpy.concatenate([t for t, _ in self._pieces]))

    def evaluate(self, s):
        s = check_arclength(s)
        out = numpy.zeros(s.shape)
        for m, (t, v) in enumerate(self._pieces):
            mask = (s >= t[0]) & (s < t[-1])
            out[mask] = self.heights[m] * numpy.interp(s[mask], t, v)
        return out

    def __call__(self, s):
        return self.evaluate(s)

    def shape_values(self, s, electrode):
        """Value of the unit shape of the given electrode at s.

        This is the derivative of the profile with respect to that electrode's
        height.
        """
        s = numpy.asarray(s, dtype=float)
        t, v = self._pieces[electrode]
        inside = (s >= t[0]) & (s < t[-1])
        return numpy.where(inside, numpy.interp(s, t, v), 0.0)

    def electrode_integrals(self):
        return numpy.array(
            [
                0.5 * h * numpy.sum((v[1:] + v[:-1]) * numpy.diff(t))
                for h, (t, v) in zip(self.heights, self._pieces)
            ]
        )

    def arclength_derivative(self):
        smooth = []
        deltas = []
        for m, (t, v) in enumerate(self._pieces):
            h = self.heights[m]
            slopes = h * numpy.diff(v) / numpy.diff(t)
            for k, slope in enumerate(slopes):
                smooth.append((t[k], t[k + 1], slope, m))
            if v[0] != 0.0:
                deltas.append((t[0], h * v[0], m))
            if v[-1] != 0.0:
                deltas.append((t[-1], -h * v[-1], m))
        return ConductanceDerivative(smooth, deltas, profile=self)

    def with_heights(self, heights, check=True):
        return ConductanceProfile(
            self.layout, self.kind, heights, shapes=self.shapes, check=check
        )

    def scaled(self, factor):
        return self.with_heights(factor * self.heights)

    def on_layout(self, layout):
        """The same shapes and heights on other electrode positions."""
        if layout.num_electrodes != self.num_electrodes:
            raise ContractError("Layouts differ in the number of electrodes.")
        return ConductanceProfile(layout, self.kind, self.heights, shapes=self.shapes)

    def to_dict(self):
        electrodes = []
        for m, (a, b) in enumerate(self.layout.arcs):
            entry = {"arc": [a, b], "height": self.heights[m]}
            if self.shapes is not None:
                entry["shape"] = self.shapes[m]
            electrodes.append(entry)
        return {"kind": self.kind, "electrodes": electrodes}

    @classmethod
    def from_dict(cls, data):
        try:
            electrodes = data["electrodes"]
            layout = ElectrodeLayout([e["arc"] for e in electrodes])
            heights = [e["height"] for e in electrodes]
            shapes = None
            if data["kind"] == "custom":
                shapes = [e["shape"] for e in electrodes]
            return cls(layout, data["kind"], heights, shapes=shapes)
        except (KeyError, TypeError) as e:
            raise ParameterError("Malformed conductance profile: %s" % e)

    def write_json(self, filename):
        with open(filename, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
        return

    def __repr__(self):
        return "ConductanceProfile(kind=%r, M=%d)" % (self.kind, self.num_electrodes)


def make_profile(layout, kind, params, shapes=None, check=True):
    return ConductanceProfile(layout, kind, params, shapes=shapes, check=check)


def arclength_derivative(profile):
    return profile.arclength_derivative()
