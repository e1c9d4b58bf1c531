#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perfhom/assembly.hpp"
#include "perfhom/errors.hpp"
#include "perfhom/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>

using namespace perfhom;

namespace {

struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed) : s(seed) {}
    double next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return (static_cast<double>(s >> 11) / 9007199254740992.0) * 2.0 - 1.0;
    }
};

SymmetricOperator diag_operator(const Vec& d) {
    SymmetricOperator op(static_cast<int>(d.size()), OperatorKind::Stiffness, nullptr);
    for (std::size_t i = 0; i < d.size(); ++i) op.add(static_cast<int>(i), static_cast<int>(i), d[i]);
    op.finalize();
    return op;
}

SymmetricOperator dense_to_operator(const DenseMatrix& m) {
    SymmetricOperator op(m.rows(), OperatorKind::Stiffness, nullptr);
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) op.add(i, j, m(i, j));
    op.finalize();
    return op;
}

// dense two-matrix oracle for the deflated-pencil check: spectral split of the
// PSD K plus a Schur complement on the transformed B (independent of the
// production Householder-basis route)
Vec nullspace_schur_oracle(const DenseMatrix& k, const DenseMatrix& b) {
    EigResult ek = dense_eig_oracle(k);
    const int n = k.rows();
    REQUIRE(std::abs(ek.values[0]) < 1e-9);
    REQUIRE(ek.values[1] > 1e-9);
    // S = Q diag(1, lambda^{-1/2}); B~ = S^T B S
    DenseMatrix s(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double scale = (j == 0) ? 1.0 : 1.0 / std::sqrt(ek.values[static_cast<std::size_t>(j)]);
            s(i, j) = ek.vectors(i, j) * scale;
        }
    }
    DenseMatrix bt(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p) {
                double bp = 0.0;
                for (int q = 0; q < n; ++q) bp += b(p, q) * s(q, j);
                acc += s(p, i) * bp;
            }
            bt(i, j) = acc;
        }
    }
    bt.symmetrize();
    // Schur complement of the (0,0) block: mu w = (B11 - B10 B00^{-1} B01) w
    double b00 = bt(0, 0);
    REQUIRE(std::abs(b00) > 1e-12);
    DenseMatrix schur(n - 1, n - 1);
    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) schur(i - 1, j - 1) = bt(i, j) - bt(i, 0) * bt(0, j) / b00;
    schur.symmetrize();
    EigResult es = dense_eig_oracle(schur);
    Vec lambdas;
    for (double mu : es.values) {
        if (std::abs(mu) > 1e-12) lambdas.push_back(1.0 / mu);
    }
    std::sort(lambdas.begin(), lambdas.end());
    return lambdas;
}

} // namespace

TEST_CASE("spd pencil: diagonal example") {
    SymmetricOperator k = diag_operator({1.0, 2.0, 3.0});
    SymmetricOperator b = diag_operator({1.0, 1.0, 1.0});
    SpdEigenpairs ep = solve_spd_pencil(k, b, 3);
    CHECK(ep.lambda[0] == doctest::Approx(1.0));
    CHECK(ep.lambda[1] == doctest::Approx(2.0));
    CHECK(ep.lambda[2] == doctest::Approx(3.0));
}

TEST_CASE("spd pencil: Dirichlet Laplacian on the unit square approaches 2 pi^2") {
    DomainMesh mesh = build_domain_mesh(1, 32, CellGeometry::no_hole(32));
    auto dm = std::make_shared<DofMap>(build_dirichlet_dofmap(mesh));
    CoefficientField id = preset_coefficients("identity", mesh);
    SymmetricOperator k = assemble_stiffness(mesh, id, dm);
    SymmetricOperator b = assemble_plain_mass(mesh, dm);
    SpdEigenpairs ep = solve_spd_pencil(k, b, 1);
    double target = 2.0 * 3.14159265358979323846 * 3.14159265358979323846;
    CHECK(std::abs(ep.lambda[0] - target) / target < 0.01);
}

TEST_CASE("spd pencil: scaling B by c divides eigenvalues by c") {
    SymmetricOperator k = diag_operator({2.0, 5.0});
    SymmetricOperator b1 = diag_operator({1.0, 1.0});
    SymmetricOperator b2 = diag_operator({4.0, 4.0});
    SpdEigenpairs e1 = solve_spd_pencil(k, b1, 2);
    SpdEigenpairs e2 = solve_spd_pencil(k, b2, 2);
    CHECK(e2.lambda[0] == doctest::Approx(e1.lambda[0] / 4.0).epsilon(1e-13));
    CHECK(e2.lambda[1] == doctest::Approx(e1.lambda[1] / 4.0).epsilon(1e-13));
}

TEST_CASE("spd pencil rejects an indefinite B") {
    SymmetricOperator k = diag_operator({1.0, 1.0});
    SymmetricOperator b = diag_operator({1.0, -1.0});
    CHECK_THROWS_AS(solve_spd_pencil(k, b, 1), SolverError);
}

TEST_CASE("indefinite pencil: K = Id, B = diag(2, -1)") {
    SymmetricOperator k = diag_operator({1.0, 1.0});
    SymmetricOperator b = diag_operator({2.0, -1.0});
    TwoSidedSpectrum sp = solve_indefinite_pencil(k, b, 1, 1);
    CHECK(sp.positive.lambda[0] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(sp.negative.lambda[0] == doctest::Approx(-1.0).epsilon(1e-13));
    // signed normalization
    CHECK(sp.positive.mu[0] * sp.positive.lambda[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("indefinite pencil: zero-mu modes are excluded and over-asking errors") {
    SymmetricOperator k = diag_operator({1.0, 1.0});
    SymmetricOperator b = diag_operator({1.0, 0.0});
    TwoSidedSpectrum sp = solve_indefinite_pencil(k, b, 1, 0);
    CHECK(sp.positive.lambda[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(solve_indefinite_pencil(k, b, 1, 1), SolverError);
    CHECK_THROWS_AS(solve_indefinite_pencil(k, b, 2, 0), SolverError);
}

TEST_CASE("property: oracle equivalence, signed normalization, B-orthogonality, reciprocity") {
    Rng rng(0xabcdef12u);
    for (int inst = 0; inst < 100; ++inst) {
        int n = 2 + static_cast<int>((rng.next() + 1.0) * 14); // 2..30
        DenseMatrix a(n, n), b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.next();
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double v = rng.next();
                b(i, j) = v;
                b(j, i) = v;
            }
        DenseMatrix k(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) s += a(l, i) * a(l, j);
                k(i, j) = s;
            }
            k(i, i) += 0.5 * n;
        }
        DenseMatrix l = cholesky(k);
        DenseMatrix c = b;
        forward_solve_multi(l, c);
        c = c.transposed();
        forward_solve_multi(l, c);
        c.symmetrize();
        EigResult oracle = dense_eig_oracle(c);
        double bn = 0.0;
        for (int i = 0; i < n; ++i) {
            double srow = 0.0;
            for (int j = 0; j < n; ++j) srow += std::abs(b(i, j));
            bn = std::max(bn, srow);
        }
        double tol = 1e-12 * bn;
        int np = 0, nn = 0;
        for (double mu : oracle.values) {
            if (mu > tol) ++np;
            if (mu < -tol) ++nn;
        }
        if (np == 0 || nn == 0) continue;
        TwoSidedSpectrum sp = solve_indefinite_pencil(k, b, np, nn);
        for (int i = 0; i < np; ++i) {
            double lam_o = 1.0 / oracle.values[static_cast<std::size_t>(n - 1 - i)];
            if (std::abs(lam_o) >= 1e6) continue;
            CHECK(sp.positive.lambda[static_cast<std::size_t>(i)] ==
                  doctest::Approx(lam_o).epsilon(1e-10));
            CHECK(sp.positive.lambda[static_cast<std::size_t>(i)] *
                      sp.positive.mu[static_cast<std::size_t>(i)] ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
        for (int i = 0; i < nn; ++i) {
            double lam_o = 1.0 / oracle.values[static_cast<std::size_t>(i)];
            if (std::abs(lam_o) >= 1e6) continue;
            CHECK(sp.negative.lambda[static_cast<std::size_t>(i)] ==
                  doctest::Approx(lam_o).epsilon(1e-10));
        }
        // signed normalization and B-orthogonality across the returned pairs
        std::vector<const Vec*> all;
        std::vector<double> lams;
        for (int i = 0; i < np; ++i) {
            all.push_back(&sp.positive.vectors[static_cast<std::size_t>(i)]);
            lams.push_back(sp.positive.lambda[static_cast<std::size_t>(i)]);
        }
        for (int i = 0; i < nn; ++i) {
            all.push_back(&sp.negative.vectors[static_cast<std::size_t>(i)]);
            lams.push_back(sp.negative.lambda[static_cast<std::size_t>(i)]);
        }
        for (std::size_t x = 0; x < all.size(); ++x) {
            Vec bu = b.apply(*all[x]);
            double qf = 0.0;
            for (int r = 0; r < n; ++r) qf += (*all[x])[static_cast<std::size_t>(r)] * bu[static_cast<std::size_t>(r)];
            CHECK(((qf > 0.0) == (lams[x] > 0.0)));
            CHECK(std::abs(std::abs(qf) - 1.0) < 1e-10);
            for (std::size_t y = x + 1; y < all.size(); ++y) {
                if (std::abs(lams[x] - lams[y]) < 1e-8 * std::max(std::abs(lams[x]), std::abs(lams[y])))
                    continue; // clustered pairs are compared at subspace level elsewhere
                double cross = 0.0;
                for (int r = 0; r < n; ++r)
                    cross += (*all[y])[static_cast<std::size_t>(r)] * bu[static_cast<std::size_t>(r)];
                CHECK(std::abs(cross) < 1e-10);
            }
        }
    }
}

TEST_CASE("deflation: path-graph Laplacian with an indefinite weight") {
    // K = path Laplacian (kernel = constants), B = diag(1,-1,1)
    DenseMatrix kd(3, 3);
    kd(0, 0) = 1;
    kd(0, 1) = -1;
    kd(1, 0) = -1;
    kd(1, 1) = 2;
    kd(1, 2) = -1;
    kd(2, 1) = -1;
    kd(2, 2) = 1;
    SymmetricOperator k = dense_to_operator(kd);
    SymmetricOperator b = diag_operator({1.0, -1.0, 1.0});
    DeflatedPencil dp = deflate_constants(k, b);
    // restricted K is SPD
    EigResult ek = dense_eig_oracle(dp.k);
    CHECK(ek.values[0] > 0.0);

    // deflated spectrum + {0} equals the singular-pencil oracle spectrum
    Vec oracle = nullspace_schur_oracle(kd, b.to_dense());
    TwoSidedSpectrum sp = solve_indefinite_pencil(dp.k, dp.b, 1, 1);
    Vec got = {sp.negative.lambda[0], sp.positive.lambda[0]};
    REQUIRE(oracle.size() == 2);
    CHECK(got[0] == doctest::Approx(oracle[0]).epsilon(1e-9));
    CHECK(got[1] == doctest::Approx(oracle[1]).epsilon(1e-9));

    // lifted eigenvectors are B-orthogonal to constants, exactly by construction
    for (const Vec& c : {sp.positive.vectors[0], sp.negative.vectors[0]}) {
        Vec u = dp.lift(c);
        Vec bu = b.apply(u);
        double s = 0.0;
        for (double v : bu) s += v;
        CHECK(std::abs(s) < 1e-12);
    }
}

TEST_CASE("deflation matches the singular-pencil oracle on random instances") {
    Rng rng(0x777u);
    for (int inst = 0; inst < 25; ++inst) {
        int n = 3 + static_cast<int>((rng.next() + 1.0) * 6); // 3..15
        // PSD K with kernel exactly the constants: weighted graph Laplacian
        DenseMatrix kd(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                double w = 0.5 + 0.5 * std::abs(rng.next());
                kd(i, j) -= w;
                kd(j, i) -= w;
                kd(i, i) += w;
                kd(j, j) += w;
            }
        }
        DenseMatrix bd(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double v = rng.next();
                bd(i, j) = v;
                bd(j, i) = v;
            }
        // ensure 1^T B 1 != 0
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += bd(i, j);
        if (std::abs(s) < 0.3) {
            for (int i = 0; i < n; ++i) bd(i, i) += 1.0;
        }
        SymmetricOperator k = dense_to_operator(kd);
        SymmetricOperator b = dense_to_operator(bd);
        DeflatedPencil dp = deflate_constants(k, b);

        Vec oracle = nullspace_schur_oracle(kd, bd);
        // gather the full deflated spectrum
        EigResult ec = [&] {
            DenseMatrix l = cholesky(dp.k);
            DenseMatrix c = dp.b;
            forward_solve_multi(l, c);
            c = c.transposed();
            forward_solve_multi(l, c);
            c.symmetrize();
            return dense_eig_oracle(c);
        }();
        Vec deflated;
        for (double mu : ec.values) {
            if (std::abs(mu) > 1e-12) deflated.push_back(1.0 / mu);
        }
        std::sort(deflated.begin(), deflated.end());
        REQUIRE(deflated.size() == oracle.size());
        for (std::size_t i = 0; i < deflated.size(); ++i) {
            CHECK(deflated[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("deflation refuses the M = 0 direction") {
    DenseMatrix kd(2, 2);
    kd(0, 0) = 1;
    kd(0, 1) = -1;
    kd(1, 0) = -1;
    kd(1, 1) = 1;
    SymmetricOperator k = dense_to_operator(kd);
    SymmetricOperator b = diag_operator({1.0, -1.0}); // 1^T B 1 = 0
    CHECK_THROWS_AS(deflate_constants(k, b), SolverError);
}

TEST_CASE("large spd path: subspace iteration agrees with the dense path") {
    DomainMesh mesh = build_domain_mesh(1, 24, CellGeometry::no_hole(24));
    auto dm = std::make_shared<DofMap>(build_dirichlet_dofmap(mesh));
    CoefficientField id = preset_coefficients("identity", mesh);
    SymmetricOperator k = assemble_stiffness(mesh, id, dm);
    SymmetricOperator b = assemble_plain_mass(mesh, dm);
    SpdEigenpairs dense = solve_spd_pencil(k, b, 3, 4200);
    SpdEigenpairs sparse = solve_spd_pencil(k, b, 3, 64); // force the iterative path
    for (int i = 0; i < 3; ++i) {
        CHECK(sparse.lambda[static_cast<std::size_t>(i)] ==
              doctest::Approx(dense.lambda[static_cast<std::size_t>(i)]).epsilon(1e-9));
    }
}
