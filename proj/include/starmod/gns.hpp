#pragma once

#include "module.hpp"

namespace starmod {

/**
 * Result of building the cyclic representation attached to a positive
 * functional: the carrier is a module over the scalar algebra, coordinates
 * live in the quotient of the algebra by the degeneracy ideal of omega.
 */
struct GnsResult {
    Representation representation;
    ModuleElement cyclic_vector;              // the class of the unit
    std::vector<AlgebraElement> ideal_basis;  // degeneracy ideal of omega
    SMat projection;  // q x n: algebra coordinates to quotient coordinates
    SMat section;     // n x q: ring lift of quotient coordinates, P S = I
};

namespace detail {

// Scalar Gram K_ab = omega(e_a^* e_b).  Hermitian for positive omega.
inline SMat functional_gram_ring(const Functional& omega) {
    const AlgebraPtr& alg = omega.algebra();
    const int n = alg->dim;
    SMat k(n, n, Scalar::zero(alg->variant));
    std::vector<AlgebraElement> star;
    star.reserve(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) star.push_back(AlgebraElement::basis(alg, a).involute());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            k.at(a, b) = omega(star[static_cast<std::size_t>(a)] * AlgebraElement::basis(alg, b));
    return k;
}

struct QuotientCoords {
    int dim = 0;      // q
    SMat projection;  // q x n
    SMat section;     // n x q
};

// Coordinates on C^n / span(kernel vectors).  The span must be saturated;
// column reduction of the stacked transposed vectors yields a unimodular
// change of basis whose trailing rows coordinatize the quotient.
inline QuotientCoords quotient_coordinates(RingVariant v, int n, const std::vector<SVec>& kernel) {
    const int r = static_cast<int>(kernel.size());
    QuotientCoords out{n - r, SMat(n - r, n, Scalar::zero(v)), SMat(n, n - r, Scalar::zero(v))};
    if (r == 0) {
        for (int i = 0; i < n; ++i) {
            out.projection.at(i, i) = Scalar::one(v);
            out.section.at(i, i) = Scalar::one(v);
        }
        return out;
    }
    SMat nt(r, n, Scalar::zero(v));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < n; ++j) nt.at(i, j) = kernel[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    ColReduction red = reduce_columns(nt);
    if (red.rank != r)
        throw std::invalid_argument("quotient_coordinates: kernel vectors are dependent");
    // U = W^T satisfies (U N)_last rows = 0; take the trailing rows of U and
    // the matching trailing columns of U^-1 = winv^T.
    for (int i = 0; i < out.dim; ++i)
        for (int j = 0; j < n; ++j) {
            out.projection.at(i, j) = red.w.at(j, r + i);
            out.section.at(j, i) = red.winv.at(r + i, j);
        }
    return out;
}

}  // namespace detail

/**
 * Basis of the degeneracy ideal {a : omega(a^* a) = 0} of a positive
 * functional on a unital algebra, computed as the saturated nullspace of the
 * Gram matrix and verified to be a left ideal.
 */
inline std::vector<AlgebraElement> gelfand_ideal(const Functional& omega) {
    const AlgebraPtr& alg = omega.algebra();
    if (!alg->unit)
        throw std::invalid_argument("gelfand_ideal: algebra has no unit");
    PositiveFunctionalCheck pos = is_positive_functional(omega);
    if (!pos.positive)
        throw std::invalid_argument("gelfand_ideal: functional is not positive: " + pos.reason);
    SMat k = detail::functional_gram_ring(omega);
    std::vector<SVec> kernel = saturated_kernel(k);
    std::vector<AlgebraElement> out;
    out.reserve(kernel.size());
    for (auto& v : kernel) out.emplace_back(alg, std::move(v));
    // Left ideal property, guaranteed by Cauchy-Schwarz; checked exactly.
    for (const auto& x : out)
        for (int c = 0; c < alg->dim; ++c) {
            AlgebraElement moved = AlgebraElement::basis(alg, c) * x;
            for (int a = 0; a < alg->dim; ++a) {
                Scalar s = Scalar::zero(alg->variant);
                for (int b = 0; b < alg->dim; ++b) s += k.at(a, b) * moved.coord(b);
                if (!s.is_zero())
                    throw std::logic_error("gelfand_ideal: nullspace is not a left ideal");
            }
        }
    return out;
}

/**
 * Cyclic representation of a positive functional on a unital algebra: the
 * algebra acts by left multiplication on its quotient modulo the degeneracy
 * ideal, with inner product <[a],[b]> = omega(a^* b) and cyclic class [1].
 */
inline GnsResult gns_construct(const Functional& omega) {
    const AlgebraPtr& alg = omega.algebra();
    std::vector<AlgebraElement> ideal = gelfand_ideal(omega);
    const int n = alg->dim;
    RingVariant v = alg->variant;

    std::vector<SVec> kernel;
    kernel.reserve(ideal.size());
    for (const auto& x : ideal) {
        SVec coords;
        for (int a = 0; a < n; ++a) coords.push_back(x.coord(a));
        kernel.push_back(std::move(coords));
    }
    detail::QuotientCoords q = detail::quotient_coordinates(v, n, kernel);
    SMat k = detail::functional_gram_ring(omega);

    // Gram on quotient coordinates through the section; representatives are
    // immaterial because K annihilates the ideal on both sides.
    SMat gq = q.section.conj_transpose() * (k * q.section);
    AlgebraPtr sc = scalar_algebra(v);
    AMat gram = amat_zero(sc, q.dim, q.dim);
    for (int i = 0; i < q.dim; ++i)
        for (int j = 0; j < q.dim; ++j)
            gram.at(i, j) = gq.at(i, j) * AlgebraElement::unit(sc);
    ModulePtr carrier = InnerProductModule::create(sc, gram, "gns space");

    // The induced form must be positive definite; a semidefinite outcome
    // means the nullspace missed a degenerate direction.
    {
        FMat h(q.dim, q.dim, CFrac::zero(v));
        for (int i = 0; i < q.dim; ++i)
            for (int j = 0; j < q.dim; ++j) h.at(i, j) = CFrac(gq.at(i, j));
        if (q.dim > 0 && psd_check(h).verdict != FormVerdict::positive_definite)
            throw std::logic_error("gns_construct: quotient inner product is degenerate");
    }

    Representation rho{alg, carrier, {}};
    rho.images.reserve(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
        SMat m = q.projection * (left_mult_matrix(AlgebraElement::basis(alg, c)) * q.section);
        AMat im = amat_zero(sc, q.dim, q.dim);
        for (int i = 0; i < q.dim; ++i)
            for (int j = 0; j < q.dim; ++j) im.at(i, j) = m.at(i, j) * AlgebraElement::unit(sc);
        rho.images.push_back(std::move(im));
    }
    CheckReport rep = check_representation(rho);
    if (!rep.ok)
        throw std::logic_error("gns_construct: quotient action is not a star representation: " +
                               rep.failures.front());

    std::vector<AlgebraElement> cyc;
    cyc.reserve(static_cast<std::size_t>(q.dim));
    for (int i = 0; i < q.dim; ++i) {
        Scalar s = Scalar::zero(v);
        for (int j = 0; j < n; ++j)
            s += q.projection.at(i, j) * (*alg->unit)[static_cast<std::size_t>(j)];
        cyc.push_back(s * AlgebraElement::unit(sc));
    }
    ModuleElement cyclic(carrier, std::move(cyc));

    return GnsResult{std::move(rho), std::move(cyclic), std::move(ideal), std::move(q.projection),
                     std::move(q.section)};
}

/**
 * omega_phi(a) = <phi, rho(a) phi> for a representation on a module with
 * scalar-valued inner products; always a positive functional.
 */
inline Functional vector_state(const Representation& rho, const ModuleElement& phi) {
    if (phi.module() != rho.module)
        throw std::invalid_argument("vector_state: vector is not in the carrier module");
    const AlgebraPtr& sc = rho.module->algebra;
    if (sc->dim != 1)
        throw std::invalid_argument("vector_state: inner products are not scalar valued");
    SVec vals;
    vals.reserve(static_cast<std::size_t>(rho.algebra->dim));
    for (int a = 0; a < rho.algebra->dim; ++a) {
        AlgebraElement val =
            inner_product(phi, op_apply(ModuleOperator{rho.module, rho.module,
                                                       rho.images[static_cast<std::size_t>(a)],
                                                       std::nullopt},
                                        phi));
        vals.push_back(val.coord(0));
    }
    return Functional(rho.algebra, std::move(vals));
}

}  // namespace starmod
