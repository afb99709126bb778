#pragma once

#include <random>

#include <starmod/algebra.hpp>
#include <starmod/fraction.hpp>
#include <starmod/literal.hpp>
#include <starmod/matrix.hpp>
#include <starmod/module.hpp>

// Deterministic random generators and shared desk fixtures for the tests.
namespace testgen {

using starmod::BaseRingElement;
using starmod::Rat;
using starmod::RingVariant;
using starmod::Scalar;

inline starmod::Rat random_rat(std::mt19937_64& rng, int max_abs = 9, int max_den = 9) {
    std::uniform_int_distribution<int> num(-max_abs, max_abs);
    std::uniform_int_distribution<int> den(1, max_den);
    return Rat(num(rng), den(rng));
}

inline BaseRingElement random_poly(std::mt19937_64& rng, int max_deg = 6,
                                   RingVariant v = RingVariant::lambda_poly) {
    std::uniform_int_distribution<int> deg(0, max_deg);
    int d = deg(rng);
    std::vector<Rat> c;
    std::bernoulli_distribution keep(0.7);
    for (int r = 0; r <= d; ++r) c.push_back(keep(rng) ? random_rat(rng) : Rat(0));
    return BaseRingElement::from_coeffs(std::move(c), v);
}

inline Scalar random_scalar(std::mt19937_64& rng, int max_deg = 3,
                            RingVariant v = RingVariant::lambda_poly) {
    if (v == RingVariant::rational)
        return Scalar(starmod::BaseRingElement(random_rat(rng)),
                      starmod::BaseRingElement(random_rat(rng)));
    return Scalar(random_poly(rng, max_deg, v), random_poly(rng, max_deg, v));
}

inline starmod::SMat random_smat(std::mt19937_64& rng, int rows, int cols, int max_deg = 2,
                                 RingVariant v = RingVariant::lambda_poly) {
    starmod::SMat m(rows, cols, Scalar::zero(v));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m.at(i, j) = random_scalar(rng, max_deg, v);
    return m;
}

inline starmod::CFrac random_frac(std::mt19937_64& rng, int max_deg = 2,
                                  RingVariant v = RingVariant::lambda_poly) {
    Scalar den = Scalar::zero(v);
    while (den.is_zero()) den = random_scalar(rng, max_deg > 1 ? 1 : max_deg, v);
    return starmod::CFrac(random_scalar(rng, max_deg, v), den);
}

inline starmod::FMat random_fmat(std::mt19937_64& rng, int rows, int cols, int max_deg = 2,
                                 RingVariant v = RingVariant::lambda_poly) {
    starmod::FMat m(rows, cols, starmod::CFrac::zero(v));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m.at(i, j) = random_frac(rng, max_deg, v);
    return m;
}

// Two-point function algebra deformed in lambda: w w = (1+l) u + l w, with
// the two characters w -> 1+l and w -> -1 attached as blocks.
inline starmod::AlgebraPtr deformed_two_point() {
    using namespace starmod;
    RingVariant v = RingVariant::lambda_poly;
    auto alg = AlgebraPresentation::create();
    alg->display_name = "deformed two point";
    alg->variant = v;
    alg->dim = 2;
    alg->labels = {"u", "w"};
    Scalar zero = Scalar::zero(v), one = Scalar::one(v), lam = Scalar::lambda(1);
    alg->structure.assign(4, {});
    alg->structure[0] = {{0, one}};
    alg->structure[1] = {{1, one}};
    alg->structure[2] = {{1, one}};
    alg->structure[3] = {{0, one + lam}, {1, lam}};
    alg->involution = SMat::identity(2, zero, one);
    alg->unit = SVec{one, zero};
    for (Scalar wval : {one + lam, -one}) {
        AlgebraPresentation::Block blk{1, {}};
        SMat mu(1, 1, zero);
        mu.at(0, 0) = one;
        SMat mw(1, 1, zero);
        mw.at(0, 0) = wval;
        blk.images = {mu, mw};
        alg->blocks.push_back(std::move(blk));
    }
    alg->class_desc = "functions";
    return alg;
}

// Group algebra of the order-two group with no block data attached.
inline starmod::AlgebraPtr generic_pair() {
    using namespace starmod;
    RingVariant v = RingVariant::rational;
    auto alg = AlgebraPresentation::create();
    alg->display_name = "order two group";
    alg->variant = v;
    alg->dim = 2;
    alg->labels = {"u", "g"};
    Scalar zero = Scalar::zero(v), one = Scalar::one(v);
    alg->structure.assign(4, {});
    alg->structure[0] = {{0, one}};
    alg->structure[1] = {{1, one}};
    alg->structure[2] = {{1, one}};
    alg->structure[3] = {{0, one}};
    alg->involution = SMat::identity(2, zero, one);
    alg->unit = SVec{one, zero};
    return alg;
}

// Defining action of the n x n matrix algebra on the free rank-n column
// module over the scalars.
inline std::pair<starmod::ModulePtr, starmod::Representation> column_rep(
    int n, RingVariant v = RingVariant::rational) {
    using namespace starmod;
    auto sc = scalar_algebra(v);
    auto mat = matrix_algebra(sc, n);
    ModulePtr cols = free_module(sc, n, "columns");
    Representation rho{mat, cols, {}};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            AMat im = amat_zero(sc, n, n);
            im.at(i, j) = AlgebraElement::unit(sc);
            rho.images.push_back(std::move(im));
        }
    return {cols, rho};
}

// omega(E_ii) = 1, other matrix units 0: the unnormalized trace.
inline starmod::Functional trace_functional(const starmod::AlgebraPtr& mat_alg, int n) {
    using namespace starmod;
    SVec vals(static_cast<std::size_t>(mat_alg->dim), Scalar::zero(mat_alg->variant));
    for (int i = 1; i <= n; ++i) {
        int idx = mat_alg->label_index("E" + std::to_string(i) + std::to_string(i));
        vals[static_cast<std::size_t>(idx)] = Scalar::one(mat_alg->variant);
    }
    return Functional(mat_alg, std::move(vals));
}

}  // namespace testgen
