#include <catch2/catch_amalgamated.hpp>

#include <starmod/gns.hpp>

#include "helpers.hpp"

using namespace starmod;

namespace {

using testgen::column_rep;
using testgen::trace_functional;

AlgebraElement from_label(const AlgebraPtr& alg, const std::string& l) {
    int idx = alg->label_index(l);
    REQUIRE(idx >= 0);
    return AlgebraElement::basis(alg, idx);
}

// omega on all basis elements must be reproduced by matrix elements against
// the cyclic class.
void check_reconstruction(const GnsResult& g, const Functional& omega) {
    const AlgebraPtr& alg = omega.algebra();
    for (int a = 0; a < alg->dim; ++a) {
        ModuleOperator pia{g.representation.module, g.representation.module,
                           g.representation.images[static_cast<std::size_t>(a)], std::nullopt};
        AlgebraElement val = inner_product(g.cyclic_vector, op_apply(pia, g.cyclic_vector));
        REQUIRE(val.coord(0) == omega(AlgebraElement::basis(alg, a)));
    }
}

// Every nonzero vector in a spanning sample has positive length.
void check_definite(const ModulePtr& carrier, std::mt19937_64& rng) {
    std::vector<ModuleElement> sample;
    for (int i = 0; i < carrier->rank; ++i) sample.push_back(ModuleElement::generator(carrier, i));
    for (int t = 0; t < 8; ++t) {
        std::vector<AlgebraElement> coords;
        for (int i = 0; i < carrier->rank; ++i)
            coords.push_back(testgen::random_scalar(rng, 1, carrier->algebra->variant) *
                             AlgebraElement::unit(carrier->algebra));
        sample.emplace_back(carrier, std::move(coords));
    }
    for (const auto& phi : sample) {
        bool zero = true;
        for (int i = 0; i < carrier->rank; ++i) zero = zero && phi.coord(i).is_zero();
        if (zero) continue;
        Scalar len = inner_product(phi, phi).coord(0);
        REQUIRE(len.is_real());
        REQUIRE(len.re().is_positive());
    }
}

}  // namespace

TEST_CASE("trace on the 2x2 matrix algebra induces a faithful 4-dimensional space") {
    auto m2 = matrix_algebra(scalar_algebra(), 2);
    Functional tr = trace_functional(m2, 2);

    REQUIRE(gelfand_ideal(tr).empty());

    GnsResult g = gns_construct(tr);
    REQUIRE(g.representation.module->rank == 4);
    REQUIRE(g.ideal_basis.empty());
    REQUIRE(check_representation(g.representation).ok);
    check_reconstruction(g, tr);

    std::mt19937_64 rng(51);
    check_definite(g.representation.module, rng);
}

TEST_CASE("point evaluation on two-point functions gives a one-dimensional space") {
    auto fn = function_algebra(2);
    SVec vals{Scalar::one(RingVariant::rational), Scalar::zero(RingVariant::rational)};
    Functional ev(fn, vals);

    auto ideal = gelfand_ideal(ev);
    REQUIRE(ideal.size() == 1);
    REQUIRE(ideal[0].coord(fn->label_index("d1")).is_zero());
    REQUIRE_FALSE(ideal[0].coord(fn->label_index("d2")).is_zero());

    GnsResult g = gns_construct(ev);
    REQUIRE(g.representation.module->rank == 1);
    check_reconstruction(g, ev);
    // f acts by its value at the first point.
    REQUIRE(g.representation.images[static_cast<std::size_t>(fn->label_index("d1"))].at(0, 0).coord(0) ==
            Scalar::one(RingVariant::rational));
    REQUIRE(g.representation.images[static_cast<std::size_t>(fn->label_index("d2"))].at(0, 0).is_zero());
}

TEST_CASE("zero functional has the whole algebra as its ideal") {
    auto fn = function_algebra(3);
    Functional z(fn, SVec(3, Scalar::zero(RingVariant::rational)));
    REQUIRE(gelfand_ideal(z).size() == 3);
}

TEST_CASE("negative and non-unital inputs are rejected") {
    auto sc = scalar_algebra();
    Functional neg(sc, SVec{-Scalar::one(RingVariant::rational)});
    REQUIRE_THROWS_AS(gelfand_ideal(neg), std::invalid_argument);

    RingVariant v = RingVariant::rational;
    auto nounit = AlgebraPresentation::create();
    nounit->display_name = "square zero line";
    nounit->variant = v;
    nounit->dim = 1;
    nounit->labels = {"x"};
    nounit->structure = {{}};
    nounit->involution = SMat::identity(1, Scalar::zero(v), Scalar::one(v));
    Functional any(nounit, SVec{Scalar::zero(v)});
    REQUIRE_THROWS_AS(gelfand_ideal(any), std::invalid_argument);
}

TEST_CASE("lambda deformed characters produce a rank two space") {
    auto alg = testgen::deformed_two_point();
    RingVariant v = RingVariant::lambda_poly;
    Scalar one = Scalar::one(v), lam = Scalar::lambda(1);
    // Sum of the two characters: u -> 2, w -> l.
    Functional omega(alg, SVec{one + one, lam});
    GnsResult g = gns_construct(omega);
    REQUIRE(g.representation.module->rank == 2);
    REQUIRE(g.ideal_basis.empty());
    check_reconstruction(g, omega);
    std::mt19937_64 rng(52);
    check_definite(g.representation.module, rng);
}

TEST_CASE("single deformed character quotients to rank one with a primitive ideal") {
    auto alg = testgen::deformed_two_point();
    RingVariant v = RingVariant::lambda_poly;
    Scalar one = Scalar::one(v), lam = Scalar::lambda(1);
    Functional omega(alg, SVec{one, one + lam});
    GnsResult g = gns_construct(omega);
    REQUIRE(g.representation.module->rank == 1);
    REQUIRE(g.ideal_basis.size() == 1);
    // Saturation keeps the ideal generator primitive over the lambda ring.
    const AlgebraElement& gen = g.ideal_basis[0];
    bool constant_coord = false;
    for (int a = 0; a < 2; ++a)
        if (!gen.coord(a).is_zero() && gen.coord(a).degree() == 0) constant_coord = true;
    REQUIRE(constant_coord);
    check_reconstruction(g, omega);
    // w acts by its character value on the line.
    const AMat& w = g.representation.images[static_cast<std::size_t>(alg->label_index("w"))];
    REQUIRE(w.at(0, 0) == (one + lam) * AlgebraElement::unit(g.representation.module->algebra));
}

TEST_CASE("indefinite lambda functional is rejected with a witness") {
    auto alg = testgen::deformed_two_point();
    RingVariant v = RingVariant::lambda_poly;
    Functional omega(alg, SVec{Scalar::lambda(1), Scalar::one(v)});
    auto rep = is_positive_functional(omega);
    REQUIRE_FALSE(rep.positive);
    REQUIRE(rep.witness);
    AlgebraElement w = *rep.witness;
    Scalar val = omega(w.involute() * w);
    REQUIRE((!val.is_real() || !val.is_zero()));
    if (val.is_real()) REQUIRE_FALSE(val.re().is_positive());
    REQUIRE_THROWS_AS(gns_construct(omega), std::invalid_argument);
}

TEST_CASE("vector states evaluate matrix coefficients") {
    auto [cols, rho] = column_rep(2);
    auto m2 = rho.algebra;
    ModuleElement e1 = ModuleElement::generator(cols, 0);
    ModuleElement e2 = ModuleElement::generator(cols, 1);

    Functional w1 = vector_state(rho, e1);
    REQUIRE(w1(from_label(m2, "E11")) == Scalar::one(RingVariant::rational));
    REQUIRE(w1(from_label(m2, "E22")).is_zero());
    REQUIRE(w1(from_label(m2, "E12")).is_zero());
    REQUIRE(is_positive_functional(w1).positive);

    Functional w0 = vector_state(rho, ModuleElement::zero(cols));
    for (int a = 0; a < m2->dim; ++a)
        REQUIRE(w0.values()[static_cast<std::size_t>(a)].is_zero());

    // Summing the two diagonal states recovers the trace.
    Functional w2 = vector_state(rho, e2);
    Functional tr = trace_functional(m2, 2);
    for (int a = 0; a < m2->dim; ++a)
        REQUIRE(w1.values()[static_cast<std::size_t>(a)] + w2.values()[static_cast<std::size_t>(a)] ==
                tr.values()[static_cast<std::size_t>(a)]);
}

TEST_CASE("vector state space matches the cyclic subrepresentation") {
    auto [cols, rho] = column_rep(2);
    Functional omega = vector_state(rho, ModuleElement::generator(cols, 0));
    GnsResult g = gns_construct(omega);
    REQUIRE(g.representation.module->rank == 2);
    check_reconstruction(g, omega);
    // The defining action is itself cyclic from e1, so the two agree.
    auto eq = are_unitarily_equivalent(g.representation, rho);
    REQUIRE(eq.verdict == EquivVerdict::yes);
}

TEST_CASE("twisted functionals stay in the battery") {
    auto m2 = matrix_algebra(scalar_algebra(), 2);
    Functional tr = trace_functional(m2, 2);
    std::mt19937_64 rng(53);
    for (int t = 0; t < 4; ++t) {
        SVec coords;
        for (int a = 0; a < m2->dim; ++a)
            coords.push_back(testgen::random_scalar(rng, 0, RingVariant::rational));
        AlgebraElement b(m2, std::move(coords));
        Functional tw = functional_twist(tr, b);
        if (!is_positive_functional(tw).positive) continue;  // b = 0 edge only
        GnsResult g = gns_construct(tw);
        check_reconstruction(g, tw);
        std::mt19937_64 rng2(54);
        check_definite(g.representation.module, rng2);
    }
}

TEST_CASE("right multiplication embeds twisted spaces") {
    auto m2 = matrix_algebra(scalar_algebra(), 2);
    Functional tr = trace_functional(m2, 2);
    AlgebraElement b = from_label(m2, "E11");
    Functional twb = functional_twist(tr, b);

    GnsResult big = gns_construct(tr);
    GnsResult small = gns_construct(twb);
    REQUIRE(small.representation.module->rank == 2);

    // [a] -> [a b] in quotient coordinates.
    SMat t = big.projection * (right_mult_matrix(b) * small.section);
    auto sc = big.representation.module->algebra;
    AMat tmat = amat_zero(sc, big.representation.module->rank, small.representation.module->rank);
    for (int i = 0; i < tmat.rows(); ++i)
        for (int j = 0; j < tmat.cols(); ++j)
            tmat.at(i, j) = t.at(i, j) * AlgebraElement::unit(sc);
    ModuleOperator emb{small.representation.module, big.representation.module, tmat, std::nullopt};
    auto rep = check_intertwiner(emb, small.representation, big.representation);
    CAPTURE(rep.failures);
    REQUIRE(rep.ok);

    // The embedding is isometric for the two quotient inner products.
    REQUIRE(tmat.conj_transpose() * (big.representation.module->gram * tmat) ==
            small.representation.module->gram);
}
