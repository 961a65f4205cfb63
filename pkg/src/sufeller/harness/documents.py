"""Instance documents for the generator recipes."""

from __future__ import annotations

import numpy as np

from ..document import DocumentBuilder
from ..measures import Measure
from . import generators as gen


def recipe_document(recipe: gen.InstanceRecipe) -> DocumentBuilder:
    """A self-contained document for one recipe.

    The indicator example ships with its intervals, ramps and both bases
    (``avoiding`` selected for analysis); random families ship bare, so
    analysis falls back to generated witnesses.
    """
    b = DocumentBuilder()
    if recipe.construction == "indicator_example":
        fx = gen.indicator_example_bundle(recipe.sizes[2])
        b.space(fx.family.s1_space, "S1")
        b.space(fx.family.s2_space, "S2")
        b.family(fx.family, "example")
        for f in fx.functions:
            b.function(f)
        for O in fx.sets:
            b.test_set(O)
        for name, B in fx.bases.items():
            b.base_family(B, name)
        b.set_config(base_family="avoiding")
        return b
    if recipe.construction == "product_mixture":
        inst = gen.product_mixture(recipe)
        s3 = inst.kernel.param_space.factors[0]
        N = recipe.sizes[2]
        mus = []
        for n in range(N):
            m = np.zeros(len(s3))
            for w, seq in zip(inst.weights, inst.s3_sequences):
                m[s3.index(seq.entries[n])] += w
            mus.append(Measure(s3, m / m.sum()))
        lim = np.zeros(len(s3))
        for w, seq in zip(inst.weights, inst.s3_sequences):
            lim[s3.index(seq.limit)] += w
        b.hat(inst.kernel, mus, Measure(s3, lim / lim.sum()), inst.s4_sequence)
        b.set_config(epsilon=1e-3)
        return b
    b.family(gen.generate(recipe), recipe.construction)
    b.set_config(epsilon=1e-3)
    return b
