#include <catch2/catch_amalgamated.hpp>

#include <starmod/deform.hpp>

#include "helpers.hpp"

using namespace starmod;

namespace {

const RingVariant LP = RingVariant::lambda_poly;

PolyObservable xvar() { return PolyObservable::variable(1, 0); }
PolyObservable pvar() { return PolyObservable::variable(1, 1); }

PolyObservable random_poly_obs(std::mt19937_64& rng, int degree) {
    PolyObservable f(1, LP);
    std::uniform_int_distribution<int> coeff(-4, 4);
    for (auto& m : monomials_up_to(1, degree)) {
        int c = coeff(rng);
        if (c != 0) f.add_term(m, Scalar(Rat(c), LP));
    }
    return f;
}

}  // namespace

TEST_CASE("moyal product on coordinate monomials") {
    PolyObservable x = xvar(), p = pvar();
    Scalar iu = Scalar::i_unit(LP);

    REQUIRE(moyal_product(x, x, 3) == x * x);

    PolyObservable comm = moyal_product(x, p, 2) - moyal_product(p, x, 2);
    PolyObservable expect(1, LP);
    expect.add_term({0, 0}, iu * Scalar::lambda(1, LP));
    REQUIRE(comm == expect);

    PolyObservable xp = moyal_product(x, p, 1);
    PolyObservable half(1, LP);
    half.add_term({1, 1}, Scalar::one(LP));
    half.add_term({0, 0}, Scalar(Rat(1, 2), LP) * iu * Scalar::lambda(1, LP));
    REQUIRE(xp == half);

    REQUIRE(moyal_product(x, p, 2).conj() == moyal_product(p, x, 2));

    // x^2 * p^2 = x^2 p^2 + 2 i lambda x p - lambda^2 / 2.
    PolyObservable q = moyal_product(x * x, p * p, 2);
    PolyObservable expect2(1, LP);
    expect2.add_term({2, 2}, Scalar::one(LP));
    expect2.add_term({1, 1}, Scalar(Rat(2), LP) * iu * Scalar::lambda(1, LP));
    expect2.add_term({0, 0}, Scalar(Rat(-1, 2), LP) * Scalar::lambda(2, LP));
    REQUIRE(q == expect2);
}

TEST_CASE("star axiom battery for the weyl product") {
    CheckReport full = check_star_axioms(moyal_star(1, 4), 4, 4);
    INFO((full.failures.empty() ? std::string() : full.failures.front()));
    REQUIRE(full.ok);

    REQUIRE(check_star_axioms(moyal_star(1, 0), 3, 0).ok);
    REQUIRE(check_star_axioms(moyal_star(2, 2), 2, 2).ok);
}

TEST_CASE("first cochain normalization is enforced") {
    // Full Poisson bracket as C1, without the half: antisymmetrization gives
    // 2 i {f,g} and the battery flags it.
    StarProduct wrong;
    wrong.vars = 1;
    wrong.order = 1;
    wrong.poisson = poisson_bidiff(1, LP);
    Bidiff c1 = wrong.poisson;
    for (auto& t : c1) t.coeff = Scalar::i_unit(LP) * t.coeff;
    wrong.cochains.push_back(c1);
    CheckReport rep = check_star_axioms(wrong, 2, 1);
    REQUIRE_FALSE(rep.ok);
    REQUIRE(rep.failures.front().find("poisson normalization") != std::string::npos);
}

TEST_CASE("antisymmetrized first cochain is the poisson bracket") {
    std::mt19937_64 rng(20260814u);
    StarProduct s = moyal_star(1, 2);
    Scalar iu = Scalar::i_unit(LP);
    for (int trial = 0; trial < 25; ++trial) {
        PolyObservable f = random_poly_obs(rng, 3), g = random_poly_obs(rng, 3);
        PolyObservable anti = apply_bidiff(s.cochains[0], f, g) - apply_bidiff(s.cochains[0], g, f);
        REQUIRE(anti == iu * apply_bidiff(s.poisson, f, g));
    }
}

TEST_CASE("equivalence operators transport the product") {
    StarProduct s = moyal_star(1, 2);

    EquivalenceOperator id;
    id.vars = 1;
    id.order = 2;
    id.stages.assign(2, {});
    StarProduct same = apply_equivalence(id, s);
    PolyObservable x = xvar(), p = pvar();
    REQUIRE(star_apply(same, x * x, p) == star_apply(s, x * x, p));

    EquivalenceOperator se;
    se.vars = 1;
    se.order = 2;
    se.stages.assign(2, {});
    se.stages[0].emplace(std::vector<int>{1, 1}, Scalar(Rat(1, 4), LP));
    StarProduct moved = apply_equivalence(se, s);

    // Oracle: S(f * g) = Sf *' Sg modulo lambda^3 on low degree monomials.
    for (auto& mf : monomials_up_to(1, 3))
        for (auto& mg : monomials_up_to(1, 3)) {
            PolyObservable f = PolyObservable::monomial(1, mf, LP);
            PolyObservable g = PolyObservable::monomial(1, mg, LP);
            PolyObservable lhs = apply_stages(se, star_apply(s, f, g)).truncate_lambda(2);
            PolyObservable rhs =
                star_apply(moved, apply_stages(se, f), apply_stages(se, g)).truncate_lambda(2);
            REQUIRE(lhs == rhs);
        }

    // The antisymmetric part survives the transport.
    PolyObservable anti =
        apply_bidiff(moved.cochains[0], x, p) - apply_bidiff(moved.cochains[0], p, x);
    PolyObservable expect(1, LP);
    expect.add_term({0, 0}, Scalar::i_unit(LP));
    REQUIRE(anti == expect);
    REQUIRE(check_star_axioms(moved, 3, 2).ok);

    // Stage-wise inverse recovers the original cochains modulo lambda^3.
    StarProduct back = apply_equivalence(invert_equivalence(se), moved);
    for (auto& mf : monomials_up_to(1, 3))
        for (auto& mg : monomials_up_to(1, 3)) {
            PolyObservable f = PolyObservable::monomial(1, mf, LP);
            PolyObservable g = PolyObservable::monomial(1, mg, LP);
            REQUIRE(star_apply(back, f, g).truncate_lambda(2) ==
                    star_apply(s, f, g).truncate_lambda(2));
        }

    EquivalenceOperator bad;
    bad.vars = 1;
    bad.order = 1;
    bad.stages.assign(1, {});
    bad.stages[0].emplace(std::vector<int>{0, 0}, Scalar::one(LP));
    REQUIRE_THROWS_AS(apply_equivalence(bad, moyal_star(1, 1)), std::invalid_argument);
}

TEST_CASE("formal positivity over the spanning family") {
    FormalFunctional gauss = gaussian_moment_functional(1, 4);
    REQUIRE(formal_positive(gauss, moyal_star(1, 0), 2, 0).positive);
    // The order-0 term of the moment functional dominates at first order.
    REQUIRE(formal_positive(gauss, moyal_star(1, 1), 2, 1).positive);

    FormalFunctional origin = origin_functional(1, 2);
    FormalPositivity neg = formal_positive(origin, moyal_star(1, 1), 1, 1);
    REQUIRE_FALSE(neg.positive);
    REQUIRE(neg.witness.has_value());
    PolyObservable lowering = pvar() - Scalar::i_unit(LP) * xvar();
    REQUIRE(*neg.witness == lowering);
    REQUIRE(*neg.value == Scalar::zero(LP) - Scalar::lambda(1, LP));

    FormalFunctional zero;
    zero.vars = 1;
    for (auto& m : monomials_up_to(1, 2)) zero.values.emplace(m, Scalar::zero(LP));
    REQUIRE(formal_positive(zero, moyal_star(1, 0), 1, 0).positive);
}

TEST_CASE("order by order positive lifts") {
    FormalFunctional gauss = gaussian_moment_functional(1, 4);
    StarProduct s = moyal_star(1, 1);

    LiftResult lift = deform_functional(gauss, s, 1, 2);
    REQUIRE_FALSE(lift.budget_exhausted);
    REQUIRE(lift.corrections.size() == 1);
    // The coefficientwise criterion forces a second-moment correction:
    // omega_1 = (1/2) * Gaussian moments.
    Scalar expected = Scalar::one(LP) + Scalar(Rat(1, 2), LP) * Scalar::lambda(1, LP);
    REQUIRE(lift.lift.values.at({2, 0}) == expected);
    REQUIRE(lift.corrections[0].values.at({2, 0}) == Scalar(Rat(1, 2), LP));
    REQUIRE(formal_positive(lift.lift, s, 2, 1).positive);

    // Classical product: the zero correction is accepted first.
    LiftResult classical = deform_functional(gauss, moyal_star(1, 0), 1, 2);
    REQUIRE(classical.corrections.size() == 1);
    REQUIRE(classical.corrections[0].values.at({2, 0}).is_zero());
    REQUIRE(classical.lift.values.at({2, 0}) == Scalar::one(LP));

    // Marginal classical positivity: evaluation at the origin kills every
    // nonconstant square, so the order-1 correction is forced.
    FormalFunctional origin = origin_functional(1, 2);
    LiftResult forced = deform_functional(origin, moyal_star(1, 1), 1, 1);
    REQUIRE_FALSE(forced.budget_exhausted);
    REQUIRE(forced.corrections.size() == 1);
    REQUIRE(forced.corrections[0].values.at({2, 0}) == Scalar(Rat(1, 2), LP));
    REQUIRE(formal_positive(forced.lift, s, 1, 1).positive);

    FormalFunctional negative = origin_functional(1, 2);
    negative.values[{0, 0}] = Scalar(Rat(-1), LP);
    REQUIRE_THROWS_AS(deform_functional(negative, s, 1, 1), std::invalid_argument);

    FormalFunctional empty;
    empty.vars = 1;
    REQUIRE_THROWS_AS(deform_functional(empty, s, 1, 1), std::invalid_argument);
}

TEST_CASE("classical limit of products and observables") {
    StarProduct s = moyal_star(1, 3);
    StarProduct cl = classical_limit(s);
    REQUIRE(cl.order == 0);
    PolyObservable x = xvar(), p = pvar();
    REQUIRE(star_apply(cl, x, p) == x * p);
    // Retraction: the classical instance maps to itself.
    StarProduct cl2 = classical_limit(cl);
    REQUIRE(star_apply(cl2, x * x, p) == x * x * p);

    PolyObservable f(1, LP);
    f.add_term({1, 0}, Scalar::one(LP) + Scalar::lambda(2, LP));
    REQUIRE(classical_limit(f) == x);
}

TEST_CASE("classical limit of deformed algebras and arrows") {
    AlgebraPtr a = testgen::deformed_two_point();
    AlgebraPtr cla = classical_limit(a);
    REQUIRE(classical_limit(a).get() == cla.get());
    // w w = (1+l) u + l w degenerates to the two point function algebra.
    REQUIRE(AlgebraElement::basis(cla, 1) * AlgebraElement::basis(cla, 1) ==
            AlgebraElement::basis(cla, 0));
    REQUIRE(check_star_algebra(cla).ok);

    Functional omega(a, SVec{Scalar::one(LP), Scalar::lambda(1, LP)});
    Functional clw = classical_limit(omega);
    REQUIRE(clw.values()[1].is_zero());

    REQUIRE_THROWS_AS(classical_limit(scalar_algebra(RingVariant::rational)),
                      std::invalid_argument);

    PicardArrow e = column_bimodule(a, 2);
    PicardArrow unit = identity_arrow(a);
    PicardArrow direct = classical_limit(compose(e, unit));
    PicardArrow staged = compose(classical_limit(e), classical_limit(unit));
    REQUIRE(direct.report.passed);
    REQUIRE(staged.report.passed);
    REQUIRE(arrows_isomorphic(direct, staged).verdict == EquivVerdict::yes);
}
