#include <catch2/catch_amalgamated.hpp>

#include "supernorm/autodiff.hpp"
#include "supernorm/gradcheck.hpp"

using namespace supernorm;

TEST_CASE("sum of a leaf gives all-ones gradient") {
    Tape tape;
    DiffMatrix w = tape.leaf(Matrix::from_rows({{1, 2}, {3, 4}}), true);
    DiffMatrix loss = tape.sum(w);
    CHECK(tape.value(loss)(0, 0) == 10.0);
    tape.backward(loss);
    Matrix g = tape.grad(w);
    for (double v : g.data) CHECK(v == 1.0);
}

TEST_CASE("matmul gradient matches the matrix-calculus identity") {
    // loss = sum(A B)  =>  dA = 1 B^T, dB = A^T 1
    Matrix av = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    Matrix bv = Matrix::from_rows({{1, -1}, {0, 2}, {3, 1}});
    Tape tape;
    DiffMatrix a = tape.leaf(av, true);
    DiffMatrix b = tape.leaf(bv, true);
    DiffMatrix loss = tape.sum(tape.matmul(a, b));
    tape.backward(loss);
    Matrix ones(av.rows, bv.cols, 1.0);
    Matrix expect_a = matmul(ones, transpose(bv));
    Matrix expect_b = matmul(transpose(av), ones);
    CHECK(max_abs_diff(tape.grad(a), expect_a) < 1e-12);
    CHECK(max_abs_diff(tape.grad(b), expect_b) < 1e-12);

    // cross-checked against central differences
    FdReport fd = finite_difference_check(
        [&](Tape& t, DiffMatrix x) { return t.sum(t.matmul(x, t.constant(bv))); }, av, 1e-5, 1e-7);
    CHECK(fd.pass);
}

TEST_CASE("relu subgradient is the positive indicator with 0 at 0") {
    Tape tape;
    DiffMatrix x = tape.leaf(Matrix::from_rows({{-1.0, 0.0, 2.5}}), true);
    tape.backward(tape.sum(tape.relu(x)));
    Matrix g = tape.grad(x);
    CHECK(g(0, 0) == 0.0);
    CHECK(g(0, 1) == 0.0);
    CHECK(g(0, 2) == 1.0);
}

TEST_CASE("elementwise_pow with zero exponent is all ones") {
    Tape tape;
    DiffMatrix base = tape.leaf(Matrix::from_rows({{0.5, 2.0}, {1.5, 0.1}}), false);
    DiffMatrix zero = tape.leaf(Matrix(1, 2, 0.0), true);
    DiffMatrix out = tape.elementwise_pow(base, zero);
    for (double v : tape.value(out).data) CHECK(v == 1.0);

    Matrix bad = Matrix::from_rows({{-1.0, 1.0}});
    Tape t2;
    DiffMatrix b2 = t2.leaf(bad, false);
    DiffMatrix e2 = t2.leaf(Matrix(1, 2, 1.0), true);
    CHECK_THROWS_AS(t2.elementwise_pow(b2, e2), NumericError);
}

TEST_CASE("segment_mean broadcasts per-segment means") {
    // batch [K3, K2] with feature = row index: means 1 and 3.5
    Tape tape;
    DiffMatrix x = tape.leaf(Matrix::from_rows({{0}, {1}, {2}, {3}, {4}}), true);
    DiffMatrix out = tape.segment_mean(x, {3, 5});
    const Matrix& v = tape.value(out);
    CHECK(v(0, 0) == 1.0);
    CHECK(v(1, 0) == 1.0);
    CHECK(v(2, 0) == 1.0);
    CHECK(v(3, 0) == 3.5);
    CHECK(v(4, 0) == 3.5);

    Tape t2;
    DiffMatrix x2 = t2.leaf(Matrix::from_rows({{0}, {1}, {2}, {3}, {4}}), true);
    DiffMatrix pooled = t2.segment_mean_pool(x2, {3, 5});
    CHECK(t2.value(pooled)(0, 0) == 1.0);
    CHECK(t2.value(pooled)(1, 0) == 3.5);
}

TEST_CASE("var_over_rows of a constant column is zero") {
    Tape tape;
    DiffMatrix x = tape.leaf(Matrix(5, 1, 3.25), true);
    CHECK(tape.value(tape.var_over_rows(x))(0, 0) == 0.0);
}

TEST_CASE("segment_sum_normalize sums to one and kills the radial direction") {
    RandomStream rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        int rows = 4 + rng.below(6);
        Matrix xv(rows, 2);
        for (double& v : xv.data) v = rng.uniform(0.5, 2.0);
        std::vector<int> offsets;
        int at = 0;
        while (at < rows) {
            at += 1 + rng.below(std::min(3, rows - at));
            offsets.push_back(at);
        }
        Tape tape;
        DiffMatrix x = tape.leaf(xv, true);
        DiffMatrix y = tape.segment_sum_normalize(x, offsets);
        const Matrix& yv = tape.value(y);
        int begin = 0;
        for (int end : offsets) {
            for (int c = 0; c < 2; ++c) {
                double s = 0.0;
                for (int i = begin; i < end; ++i) s += yv(i, c);
                CHECK(s == Catch::Approx(1.0).margin(1e-12));
            }
            begin = end;
        }
        // with a uniform upstream gradient the input gradient vanishes
        tape.backward(tape.sum(y));
        Matrix g = tape.grad(x);
        for (double v : g.data) CHECK(std::abs(v) < 1e-8);
    }
}

TEST_CASE("gradient with respect to a normalized vector stays orthogonal to it") {
    RandomStream rng(6);
    Matrix xv(6, 1);
    for (double& v : xv.data) v = rng.uniform(0.5, 2.0);
    Matrix upstream(6, 1);
    for (double& v : upstream.data) v = rng.uniform(-1.0, 1.0);
    Tape tape;
    DiffMatrix x = tape.leaf(xv, true);
    DiffMatrix y = tape.segment_sum_normalize(x, {6});
    tape.backward(tape.sum(tape.hadamard(y, tape.constant(upstream))));
    Matrix g = tape.grad(x);
    double dot = 0.0;
    for (int i = 0; i < 6; ++i) dot += g(i, 0) * xv(i, 0);
    CHECK(std::abs(dot) < 1e-10);
}

TEST_CASE("backward twice without reset is a state error") {
    Tape tape;
    DiffMatrix x = tape.leaf(Matrix(2, 2, 1.0), true);
    DiffMatrix loss = tape.sum(x);
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), DataError);
    tape.reset_grads();
    tape.backward(loss);  // fine after reset
    CHECK(tape.grad(x)(0, 0) == 1.0);
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    DiffMatrix x = tape.leaf(Matrix(2, 2, 1.0), true);
    CHECK_THROWS_AS(tape.backward(x), DataError);
}

TEST_CASE("gradients accumulate over multiple paths") {
    Tape tape;
    DiffMatrix x = tape.leaf(Matrix(1, 1, 3.0), true);
    DiffMatrix y = tape.add(x, x);  // dy/dx = 2
    tape.backward(tape.sum(y));
    CHECK(tape.grad(x)(0, 0) == 2.0);
}

TEST_CASE("non-grad leaves stay untouched") {
    Tape tape;
    DiffMatrix x = tape.leaf(Matrix(2, 1, 1.0), true);
    DiffMatrix c = tape.leaf(Matrix(2, 1, 5.0), false);
    tape.backward(tape.sum(tape.hadamard(x, c)));
    CHECK(tape.grad(x)(0, 0) == 5.0);
    Matrix gc = tape.grad(c);
    for (double v : gc.data) CHECK(v == 0.0);
}

TEST_CASE("shape mismatches are rejected") {
    Tape tape;
    DiffMatrix a = tape.leaf(Matrix(2, 2), true);
    DiffMatrix b = tape.leaf(Matrix(3, 2), true);
    CHECK_THROWS_AS(tape.add(a, b), DataError);
    CHECK_THROWS_AS(tape.hadamard(a, b), DataError);
    CHECK_THROWS_AS(tape.matmul(a, b), DataError);
    CHECK_THROWS_AS(tape.segment_mean(a, {5}), DataError);
}

TEST_CASE("finite differences on a quadratic are tight") {
    RandomStream rng(8);
    Matrix x0(3, 2);
    for (double& v : x0.data) v = rng.uniform(-1.0, 1.0);
    FdReport fd = finite_difference_check(
        [](Tape& t, DiffMatrix x) { return t.sum(t.hadamard(x, x)); }, x0, 1e-5, 1e-7);
    CHECK(fd.pass);
    CHECK(fd.max_rel_err < 1e-7);
}

TEST_CASE("constant function has zero gradient both ways") {
    Matrix x0(2, 2, 1.5);
    FdReport fd = finite_difference_check(
        [](Tape& t, DiffMatrix x) {
            (void)x;
            return t.sum(t.constant(Matrix(1, 1, 7.0)));
        },
        x0, 1e-5, 1e-10);
    CHECK(fd.pass);
    CHECK(fd.max_rel_err == 0.0);
}

TEST_CASE("backward is deterministic for identical seeds") {
    auto run = [](std::uint64_t seed) {
        RandomStream rng(seed);
        Matrix xv(4, 3);
        for (double& v : xv.data) v = rng.normal();
        Tape tape;
        DiffMatrix x = tape.leaf(xv, true);
        DiffMatrix y = tape.relu(tape.matmul(x, tape.constant(Matrix::identity(3))));
        tape.backward(tape.sum(tape.hadamard(y, y)));
        return tape.grad(x).data;
    };
    CHECK(run(99) == run(99));
}

TEST_CASE("full gradient suite passes") {
    // every registered op, the losses, and the normalization layers at
    // tol 1e-4 / h 1e-5 across 20 random instances each
    std::vector<GradcheckEntry> report = run_gradcheck();
    REQUIRE(!report.empty());
    for (const GradcheckEntry& e : report) {
        INFO(e.op << " max_rel_err=" << e.max_rel_err);
        CHECK(e.pass);
    }
    CHECK(gradcheck_passed(report));
}
