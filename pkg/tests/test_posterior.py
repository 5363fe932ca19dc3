import math

import numpy as np
import pytest
from scipy import stats

from matinfer import autodiff as ad
from matinfer import params as pr
from matinfer.materials import RandomInputs, get_model
from matinfer.params import ContinuousParam, DiscreteParam, ParamSpec
from matinfer.posterior import ErrorModel, NonFiniteForwardError, Posterior
from matinfer.render import CameraRig, render_collocated
from matinfer.summaries import (SummaryComponent, SummaryVector,
                                evaluate_summary, summary_bins,
                                summary_compose, summary_mean)
from oracles import rel_error

SPEC = ParamSpec("toy", continuous=(
    ContinuousParam("a", 0.5, 0.3, 0.0, 1.0),
    ContinuousParam("b", 2.0, 1.5, 0.5, 8.0),
), discrete=(DiscreteParam("k", 3, pmf=(0.5, 0.3, 0.2)),))


class TestTransforms:
    def test_midpoint_maps_to_zero(self):
        u = pr.to_unconstrained(np.array([0.5, 4.25]), SPEC)
        assert np.abs(u).max() < 1e-12

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            theta, _ = SPEC.sample_prior(rng)
            u = pr.to_unconstrained(theta, SPEC)
            back, _ = pr.from_unconstrained(u, SPEC)
            assert np.abs(theta - back).max() < 1e-12

    def test_boundary_rejected(self):
        with pytest.raises(ValueError, match="boundary"):
            pr.to_unconstrained(np.array([0.0, 4.0]), SPEC)

    def test_log_jacobian_matches_fd_determinant(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            u = rng.standard_normal(2) * 2
            _, log_jac = pr.from_unconstrained(u, SPEC)
            h = 1e-6
            jac = np.zeros((2, 2))
            for i in range(2):
                up, um = u.copy(), u.copy()
                up[i] += h
                um[i] -= h
                jac[:, i] = (pr.from_unconstrained(up, SPEC)[0]
                             - pr.from_unconstrained(um, SPEC)[0]) / (2 * h)
            fd = math.log(abs(np.linalg.det(jac)))
            assert abs(log_jac - fd) < 1e-6

    def test_extreme_u_stays_finite(self):
        theta, log_jac = pr.from_unconstrained(np.array([900.0, -900.0]), SPEC)
        assert np.isfinite(theta).all() and np.isfinite(log_jac)

    def test_differentiable_transform_agrees(self):
        u0 = np.array([0.3, -1.2])
        with ad.Tape() as tape:
            uv = ad.Var(u0)
            params, log_jac = pr.bounded_vars(uv, SPEC)
            theta_np, log_jac_np = pr.from_unconstrained(u0, SPEC)
            assert float(params["a"].value) == pytest.approx(theta_np[0], abs=1e-14)
            assert float(params["b"].value) == pytest.approx(theta_np[1], abs=1e-14)
            assert float(log_jac.value) == pytest.approx(log_jac_np, abs=1e-12)


class TestLogPrior:
    def test_matches_scipy_truncnorm(self):
        # independent closed-form oracle for the truncated-Gaussian density
        rng = np.random.default_rng(2)
        for _ in range(20):
            theta, td = SPEC.sample_prior(rng)
            expect = 0.0
            for x, p in zip(theta, SPEC.continuous):
                a, b = (p.low - p.mean) / p.std, (p.high - p.mean) / p.std
                expect += stats.truncnorm.logpdf(x, a, b, loc=p.mean, scale=p.std)
            expect += math.log(SPEC.discrete[0].pmf[int(td[0])])
            got = pr.log_prior(theta, td, SPEC)
            assert got == pytest.approx(expect, rel=1e-10)

    def test_out_of_bounds_is_minus_inf(self):
        assert pr.log_prior(np.array([1.5, 4.0]), np.array([0]), SPEC) == -math.inf

    def test_doubling_std_changes_density_as_closed_form(self):
        wide = ParamSpec("toy2", continuous=(
            ContinuousParam("a", 0.5, 0.6, 0.0, 1.0),), discrete=())
        narrow = ParamSpec("toy2", continuous=(
            ContinuousParam("a", 0.5, 0.3, 0.0, 1.0),), discrete=())
        x = np.array([0.5])
        diff = (pr.log_prior(x, np.zeros(0), narrow)
                - pr.log_prior(x, np.zeros(0), wide))
        a_n, b_n = (0.0 - 0.5) / 0.3, (1.0 - 0.5) / 0.3
        a_w, b_w = (0.0 - 0.5) / 0.6, (1.0 - 0.5) / 0.6
        expect = (stats.truncnorm.logpdf(0.5, a_n, b_n, loc=0.5, scale=0.3)
                  - stats.truncnorm.logpdf(0.5, a_w, b_w, loc=0.5, scale=0.6))
        assert diff == pytest.approx(expect, rel=1e-10)


def make_posterior(model_name="bump", size=32, seed=3, rel=0.05):
    model = get_model(model_name)
    rig = CameraRig(resolution=size)
    z = RandomInputs.create(seed, size)
    summary = summary_compose([
        (lambda im: summary_bins(im, "concentric", 8), 1.0),
        (summary_mean, 1.0),
    ])
    theta_star = model.spec.prior_mode()
    td_star = np.zeros(model.spec.n_discrete, dtype=np.int64)
    with ad.Tape():
        maps = model.generate_from_values(theta_star, td_star, z, size, rig.texel_size)
        img = np.asarray(render_collocated(maps, rig).value)
    target = evaluate_summary(summary, img)
    error = ErrorModel.relative(target, rel=rel)
    return Posterior(model, z, rig, summary, target, error), theta_star, td_star


class TestErrorModel:
    def test_positive_entries_required(self):
        with pytest.raises(ValueError):
            ErrorModel(np.array([0.1, 0.0]))

    def test_relative_floor(self):
        target = SummaryVector(np.array([10.0, 1e-9, -4.0]),
                               (SummaryComponent("x", 0, 3),))
        em = ErrorModel.relative(target, rel=0.1, floor=1e-3)
        assert np.allclose(em.sigma, [1.0, 1e-3, 0.4])


class TestNegLogPosterior:
    def test_data_term_zero_at_theta_star(self):
        post, theta_star, td_star = make_posterior()
        assert post.data_term(theta_star, td_star) == pytest.approx(0.0, abs=1e-18)

    def test_unit_delta_quadratic_form(self):
        # hand-built check: delta = (1, 0, ...), sigma_1 = 0.5 -> 0.5*(1/0.5)^2 = 2
        delta = np.zeros(4)
        delta[0] = 1.0
        sigma = np.array([0.5, 1.0, 1.0, 1.0])
        term = 0.5 * np.sum((delta / sigma) ** 2)
        assert term == pytest.approx(2.0)

    def test_gradient_matches_fd(self):
        post, theta_star, td_star = make_posterior()
        rng = np.random.default_rng(4)
        theta, td = post.spec.sample_prior(rng)
        u = pr.to_unconstrained(theta, post.spec)
        nlp, g = post.nlp_u(u, td)
        h = 1e-4
        fd = np.zeros_like(u)
        for i in range(len(u)):
            up, um = u.copy(), u.copy()
            up[i] += h
            um[i] -= h
            fd[i] = (post.nlp_u(up, td, with_grad=False)
                     - post.nlp_u(um, td, with_grad=False)) / (2 * h)
        assert rel_error(g, fd) < 1e-3

    def test_gradient_norm_small_at_synthetic_optimum(self):
        # prior-mode-aligned construction: theta* sits at the mode of the
        # transformed prior (found by an independent 1-d optimizer per
        # component), so with the data term zeroed there the full gradient
        # vanishes
        from scipy import optimize
        model = get_model("bump")
        spec = model.spec
        u_star = np.empty(spec.n_continuous)
        for i, p in enumerate(spec.continuous):
            def neg_log_tprior(u, p=p):
                s = 1.0 / (1.0 + math.exp(-u)) if u >= 0 else math.exp(u) / (1.0 + math.exp(u))
                x = p.low + (p.high - p.low) * s
                z = (x - p.mean) / p.std
                a = abs(u)
                log_jac = -a - 2.0 * math.log1p(math.exp(-a))
                return 0.5 * z * z - log_jac
            u_star[i] = optimize.minimize_scalar(neg_log_tprior, bounds=(-30, 30),
                                                 method="bounded",
                                                 options={"xatol": 1e-12}).x
        theta_star, _ = pr.from_unconstrained(u_star, spec)
        size, seed = 32, 3
        rig = CameraRig(resolution=size)
        z = RandomInputs.create(seed, size)
        summary = summary_compose([
            (lambda im: summary_bins(im, "concentric", 8), 1.0),
            (summary_mean, 1.0),
        ])
        td_star = np.zeros(0, dtype=np.int64)
        with ad.Tape():
            maps = model.generate_from_values(theta_star, td_star, z, size, rig.texel_size)
            img = np.asarray(render_collocated(maps, rig).value)
        target = evaluate_summary(summary, img)
        post = Posterior(model, z, rig, summary, target, ErrorModel.relative(target))
        _, g = post.nlp_u(u_star, td_star)
        assert np.linalg.norm(g) < 1e-6

    def test_mean_summary_shift_invariance(self):
        # adding a constant to all summary components of target and candidate
        # leaves the quadratic form unchanged
        delta = np.array([0.3, -0.2, 0.1])
        sigma = np.array([0.5, 0.7, 0.9])
        base = 0.5 * np.sum((delta / sigma) ** 2)
        shifted = 0.5 * np.sum((((delta + 5.0) - 5.0) / sigma) ** 2)
        assert shifted == pytest.approx(base, rel=1e-12)

    def test_nonfinite_forward_raises_with_dump(self):
        post, theta_star, td_star = make_posterior()
        # light intensity at an absurd unconstrained value overflows exp in
        # the vignette path only if forced; instead, patch the model to blow up
        orig = post.model.generate

        def boom(*a, **k):
            raise ad.NonFiniteError("exp")

        post.model = type(post.model)()
        post.model.generate = boom
        try:
            with pytest.raises(NonFiniteForwardError, match="theta_c"):
                post.nlp_u(np.zeros(post.spec.n_continuous), td_star)
        finally:
            post.model.generate = orig

    def test_discrete_params_never_get_gradients(self):
        post, theta_star, td_star = make_posterior("leather")
        u = pr.to_unconstrained(theta_star, post.spec)
        nlp0, g0 = post.nlp_u(u, np.array([0, 0]))
        nlp1, g1 = post.nlp_u(u, np.array([1, 0]))
        # gradients exist for theta_c in both discrete states; the values differ
        assert g0.shape == g1.shape == (post.spec.n_continuous,)
        assert nlp0 != nlp1

    def test_layout_mismatch_rejected(self):
        post, theta_star, td_star = make_posterior()
        other = evaluate_summary(summary_mean, np.ones((32, 32, 3)))
        with pytest.raises(ValueError):
            Posterior(post.model, post.z, post.rig, post.summary_fn, other,
                      ErrorModel(np.ones(3))).nlp_u(
                np.zeros(post.spec.n_continuous), td_star)
