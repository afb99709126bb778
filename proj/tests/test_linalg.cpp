#include <catch2/catch_amalgamated.hpp>

#include <starmod/linalg.hpp>

#include "helpers.hpp"

using namespace starmod;

namespace {

FVec mat_apply(const FMat& a, const FVec& x) { return a.apply(x); }

bool vec_is_zero(const FVec& x) {
    for (const auto& e : x)
        if (!e.is_zero()) return false;
    return true;
}

FMat diag_matrix(const std::vector<CFrac>& d, RingVariant v) {
    FMat m(static_cast<int>(d.size()), static_cast<int>(d.size()), CFrac::zero(v));
    for (std::size_t i = 0; i < d.size(); ++i) m.at(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

SMat smat2(RingVariant v, const char* a, const char* b, const char* c, const char* d) {
    SMat m(2, 2, Scalar::zero(v));
    m.at(0, 0) = parse_scalar(a, v);
    m.at(0, 1) = parse_scalar(b, v);
    m.at(1, 0) = parse_scalar(c, v);
    m.at(1, 1) = parse_scalar(d, v);
    return m;
}

}  // namespace

TEST_CASE("row reduction solves linear systems exactly") {
    std::mt19937_64 rng(2024);
    for (RingVariant v : {RingVariant::rational, RingVariant::lambda_poly}) {
        for (int trial = 0; trial < 25; ++trial) {
            int rows = 1 + static_cast<int>(rng() % 4);
            int cols = 1 + static_cast<int>(rng() % 4);
            FMat a = testgen::random_fmat(rng, rows, cols, 1, v);

            // Consistent by construction: b = A x0.
            FVec x0;
            for (int j = 0; j < cols; ++j) x0.push_back(testgen::random_frac(rng, 1, v));
            FVec b = mat_apply(a, x0);
            LinSolve sol = solve_linear(a, b);
            REQUIRE(sol.consistent);
            FVec ax = mat_apply(a, sol.particular);
            for (int i = 0; i < rows; ++i) REQUIRE(ax[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(i)]);

            for (const auto& k : sol.kernel) REQUIRE(vec_is_zero(mat_apply(a, k)));
            REQUIRE(static_cast<int>(sol.kernel.size()) == cols - rank_of(a));
        }
    }
}

TEST_CASE("inconsistent systems are reported") {
    RingVariant v = RingVariant::rational;
    // x + y = 1 and x + y = 2 cannot both hold.
    FMat a(2, 2, CFrac::zero(v));
    a.at(0, 0) = a.at(0, 1) = a.at(1, 0) = a.at(1, 1) = CFrac::one(v);
    FVec b{CFrac::one(v), CFrac(Scalar(Rat(2), v))};
    REQUIRE_FALSE(solve_linear(a, b).consistent);
}

TEST_CASE("matrix inversion round trips") {
    std::mt19937_64 rng(77);
    for (RingVariant v : {RingVariant::rational, RingVariant::lambda_poly}) {
        int found = 0;
        for (int trial = 0; trial < 20; ++trial) {
            int n = 1 + static_cast<int>(rng() % 3);
            FMat a = testgen::random_fmat(rng, n, n, 1, v);
            auto inv = invert(a);
            if (!inv) {
                REQUIRE(rank_of(a) < n);
                continue;
            }
            ++found;
            FMat id = FMat::identity(n, CFrac::zero(v), CFrac::one(v));
            REQUIRE(a * *inv == id);
            REQUIRE(*inv * a == id);
        }
        REQUIRE(found > 0);

        // Singular by construction: second row equals the first.
        FMat s(2, 2, CFrac::zero(v));
        s.at(0, 0) = s.at(1, 0) = CFrac::one(v);
        s.at(0, 1) = s.at(1, 1) = CFrac(Scalar(Rat(3), v));
        REQUIRE_FALSE(invert(s).has_value());
    }
}

TEST_CASE("field vectors clear to primitive ring vectors") {
    std::mt19937_64 rng(555);
    for (RingVariant v : {RingVariant::rational, RingVariant::lambda_poly}) {
        for (int trial = 0; trial < 30; ++trial) {
            int n = 1 + static_cast<int>(rng() % 4);
            FVec x;
            for (int j = 0; j < n; ++j) x.push_back(testgen::random_frac(rng, 2, v));
            if (vec_is_zero(x)) continue;
            SVec out = clear_denominators(x);

            // Parallel to the input: cross products agree.
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    REQUIRE(CFrac(out[static_cast<std::size_t>(i)]) * x[static_cast<std::size_t>(j)] ==
                            CFrac(out[static_cast<std::size_t>(j)]) * x[static_cast<std::size_t>(i)]);

            // Primitive: the monic gcd of the entries is 1.
            Scalar content = Scalar::zero(v);
            for (const auto& s : out)
                if (!s.is_zero()) content = content.is_zero() ? s : scalar_gcd(content, s);
            content = scalar_gcd(content, Scalar::zero(v));
            if (v == RingVariant::lambda_poly) REQUIRE(content.degree() == 0);
        }
    }
}

TEST_CASE("column reduction yields unimodular transforms and saturated kernels") {
    std::mt19937_64 rng(31337);
    for (RingVariant v : {RingVariant::rational, RingVariant::lambda_poly}) {
        for (int trial = 0; trial < 20; ++trial) {
            int rows = 1 + static_cast<int>(rng() % 3);
            int cols = 1 + static_cast<int>(rng() % 4);
            SMat a = testgen::random_smat(rng, rows, cols, 2, v);
            ColReduction red = reduce_columns(a);

            SMat id = SMat::identity(cols, Scalar::zero(v), Scalar::one(v));
            REQUIRE(red.w * red.winv == id);
            REQUIRE(red.winv * red.w == id);

            REQUIRE(red.rank == rank_of(to_frac(a)));

            // Trailing columns of A W vanish; leading ones are nonzero.
            SMat aw = a * red.w;
            for (int j = 0; j < cols; ++j) {
                bool col_zero = true;
                for (int i = 0; i < rows; ++i)
                    if (!aw.at(i, j).is_zero()) col_zero = false;
                if (j < red.rank)
                    REQUIRE_FALSE(col_zero);
                else
                    REQUIRE(col_zero);
            }

            // Saturation: any field solution of A x = 0, cleared to the ring,
            // is a ring combination of the kernel columns.
            auto kern = saturated_kernel(a);
            FMat fa = to_frac(a);
            for (const auto& fk : kernel_basis(fa)) {
                SVec ring_k = clear_denominators(fk);
                if (kern.empty()) {
                    bool all_zero = true;
                    for (const auto& s : ring_k)
                        if (!s.is_zero()) all_zero = false;
                    REQUIRE(all_zero);
                    continue;
                }
                FMat km(cols, static_cast<int>(kern.size()), CFrac::zero(v));
                for (std::size_t c = 0; c < kern.size(); ++c)
                    for (int r = 0; r < cols; ++r)
                        km.at(r, static_cast<int>(c)) = CFrac(kern[c][static_cast<std::size_t>(r)]);
                FVec rhs;
                for (int r = 0; r < cols; ++r) rhs.push_back(CFrac(ring_k[static_cast<std::size_t>(r)]));
                LinSolve sol = solve_linear(km, rhs);
                REQUIRE(sol.consistent);
                for (const auto& c : sol.particular) REQUIRE(c.to_ring().has_value());
            }
        }
    }
}

TEST_CASE("saturated kernels are primitive for divisible relations") {
    RingVariant v = RingVariant::lambda_poly;
    // Kernel of [l, l^2] is generated by (l, -1) up to sign, not (l^2, -l).
    SMat a(1, 2, Scalar::zero(v));
    a.at(0, 0) = Scalar::lambda(1);
    a.at(0, 1) = Scalar::lambda(2);
    auto kern = saturated_kernel(a);
    REQUIRE(kern.size() == 1);
    const SVec& k = kern[0];
    REQUIRE((a.at(0, 0) * k[0] + a.at(0, 1) * k[1]).is_zero());
    Scalar g = scalar_gcd(k[0], k[1]);
    REQUIRE(g.degree() == 0);
}

TEST_CASE("hermitian congruence diagonalization is exact") {
    std::mt19937_64 rng(90210);
    for (RingVariant v : {RingVariant::rational, RingVariant::lambda_poly}) {
        for (int trial = 0; trial < 15; ++trial) {
            int n = 1 + static_cast<int>(rng() % 3);
            FMat m = testgen::random_fmat(rng, n, n, 1, v);
            FMat h = m + m.conj_transpose();
            REQUIRE(is_hermitian(h));

            CongruenceDiag cd = congruence_diagonalize(h);
            REQUIRE(cd.p.rows() == n);
            REQUIRE(invert(cd.p).has_value());
            REQUIRE(cd.p.conj_transpose() * h * cd.p == diag_matrix(cd.diag, v));
            for (const auto& d : cd.diag) REQUIRE(d.is_real());

            // Squares are positive semidefinite; indefinite verdicts carry a
            // witness vector with a strictly negative value.
            FMat sq = m.conj_transpose() * m;
            REQUIRE(psd_check(sq).verdict != FormVerdict::indefinite_or_negative);

            PsdResult res = psd_check(h);
            if (res.verdict == FormVerdict::indefinite_or_negative) {
                REQUIRE(res.negative_witness.has_value());
                const FVec& w = *res.negative_witness;
                CFrac val = CFrac::zero(v);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        val = val + conj(w[static_cast<std::size_t>(i)]) * h.at(i, j) *
                                        w[static_cast<std::size_t>(j)];
                REQUIRE(val.is_real());
                REQUIRE(val.sign_real() < 0);
            }
        }
    }
}

TEST_CASE("definiteness verdicts on fixed matrices") {
    RingVariant q = RingVariant::rational;
    RingVariant l = RingVariant::lambda_poly;
    auto frac2 = [&](const SMat& m) { return to_frac(m); };

    REQUIRE(psd_check(frac2(smat2(q, "1", "0", "0", "1"))).verdict == FormVerdict::positive_definite);
    REQUIRE(psd_check(frac2(smat2(q, "0", "0", "0", "0"))).verdict ==
            FormVerdict::positive_semidefinite);
    REQUIRE(psd_check(frac2(smat2(q, "1", "1", "1", "1"))).verdict ==
            FormVerdict::positive_semidefinite);
    REQUIRE(psd_check(frac2(smat2(q, "1", "2", "2", "1"))).verdict ==
            FormVerdict::indefinite_or_negative);
    REQUIRE(psd_check(frac2(smat2(q, "1", "0", "0", "-1"))).verdict ==
            FormVerdict::indefinite_or_negative);
    // Zero diagonal forces the manufactured pivot path.
    REQUIRE(psd_check(frac2(smat2(q, "0", "i", "-i", "0"))).verdict ==
            FormVerdict::indefinite_or_negative);

    // An order-sensitive family: lambda dominates every positive rational.
    REQUIRE(psd_check(frac2(smat2(l, "l", "0", "0", "l^3"))).verdict ==
            FormVerdict::positive_definite);
    REQUIRE(psd_check(frac2(smat2(l, "l", "il/2", "-il/2", "l/4"))).verdict ==
            FormVerdict::positive_semidefinite);
    REQUIRE(psd_check(frac2(smat2(l, "l/4", "il/2", "-il/2", "l/4"))).verdict ==
            FormVerdict::indefinite_or_negative);
    FMat neg(1, 1, CFrac::zero(l));
    neg.at(0, 0) = CFrac(parse_scalar("-l^3", l));
    REQUIRE(psd_check(neg).verdict == FormVerdict::indefinite_or_negative);
}
