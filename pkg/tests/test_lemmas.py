import math

import numpy as np
import pytest

from oflux.errors import DomainError
from oflux.field_core import HALF_PLUS, Grid3, VectorField
from oflux.lemmas import Check, lemma_suite, random_half_field, truncation_checks
from oflux.mollifier import make_kernel
from oflux.reflectex import extend
from oflux.synth_fields import gen_boundary_flux, gen_lacunary, gen_shear

G = Grid3(16, 16, 8, 3.0)


@pytest.mark.parametrize("seed", range(5))
def test_random_fields_pass(seed):
    checks = lemma_suite(random_half_field(G, seed), seed=seed)
    bad = [c for c in checks if not c.passed]
    assert not bad, bad
    names = {c.name for c in checks}
    assert {"involution", "adjoint_symmetry", "truncated_commutation", "boundary_normal_vanishing"} <= names


@pytest.mark.parametrize("make", [lambda g: gen_shear(np.cos, np.sin, g),
                                  lambda g: gen_lacunary(0.5, 3, 2, g)])
def test_generated_fields_pass(make):
    g = Grid3(32, 32, 16, math.pi)
    assert all(c.passed for c in lemma_suite(make(g), seed=1))


def test_boundary_flux_fails_only_the_input_trace():
    g = Grid3(32, 32, 16, math.pi)
    checks = {c.name: c for c in lemma_suite(gen_boundary_flux(g), seed=1)}
    assert not checks["boundary_normal_input"].passed
    assert checks["boundary_normal_input"].value == pytest.approx(1.0)
    # the extension zeroes the trace, so the mollified field is still clean
    assert checks["boundary_normal_vanishing"].passed


def test_involution_is_exact():
    c = {c.name: c for c in lemma_suite(random_half_field(G, 9))}["involution"]
    assert c.value == 0.0 and c.tol == 0.0


def test_truncation_needs_gamma_above_epsilon():
    k = make_kernel(1.6, G)
    f = extend(random_half_field(G, 0)).field
    with pytest.raises(DomainError, match="epsilon < gamma"):
        truncation_checks(f, f, 1.0, k)


def test_check_record():
    c = Check("x", 1e-13, 1e-11, True)
    assert c.to_dict() == {"name": "x", "value": 1e-13, "tol": 1e-11, "passed": True}


def test_random_half_field_shape():
    f = random_half_field(G, 3)
    assert f.support == HALF_PLUS
    assert not np.any(f.comps[..., :G.k0]) and not np.any(f.comps[2, :, :, G.k0])
    assert isinstance(f, VectorField)
