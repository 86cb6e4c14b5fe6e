#include "doctest.h"

#include "deepesn/Init.hpp"
#include "deepesn/Readout.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace deepesn;
using deepesn::testing::random_inputs;

namespace {

// Oracle: explicit inverse of the regularized normal matrix, with an
// unpenalized ones column when an intercept is fitted.
Eigen::MatrixXd explicit_inverse_solution(const Eigen::MatrixXd& s, const Eigen::MatrixXd& y, double lambda,
                                          bool intercept)
{
    Eigen::MatrixXd a = s;
    if (intercept) {
        a.conservativeResize(Eigen::NoChange, s.cols() + 1);
        a.col(s.cols()).setOnes();
    }
    Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(a.cols(), a.cols()) * lambda;
    if (intercept) penalty(s.cols(), s.cols()) = 0.0;
    return (a.transpose() * a + penalty).inverse() * a.transpose() * y;
}

RegressionProblem<double> random_problem(Eigen::Index rows, Eigen::Index dims, Eigen::Index outputs,
                                         std::uint64_t seed)
{
    RegressionProblem<double> p;
    p.states = random_inputs(rows, dims, seed);
    p.targets = random_inputs(rows, outputs, seed + 1000);
    return p;
}

} // namespace

TEST_CASE("train_ridge exact interpolation cases")
{
    RegressionProblem<double> p;
    p.states = Eigen::MatrixXd::Identity(4, 4);
    p.targets = Eigen::MatrixXd::Identity(4, 4).col(0);
    const auto r = train_ridge(p, 0.0);
    Eigen::RowVector4d expect(1, 0, 0, 0);
    CHECK((r.weights - expect).cwiseAbs().maxCoeff() <= 1e-14);

    RegressionProblem<double> q;
    q.states.resize(3, 2);
    q.states << 1, 0, 0, 1, 1, 1;
    q.targets.resize(3, 1);
    q.targets << 1, 1, 2;
    const auto rq = train_ridge(q, 0.0);
    CHECK(rq.weights(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(rq.weights(0, 1) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("weight norm shrinks monotonically with lambda")
{
    const auto p = random_problem(80, 12, 2, 3);
    const RidgeSolver<double> solver(p, false);
    double prev = INFINITY;
    for (int k = -12; k <= 6; ++k) {
        const double norm = solver.solve(std::pow(10.0, k)).weights.norm();
        CHECK(norm < prev);
        prev = norm;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("predict")
{
    Readout<double> zero;
    zero.weights = Eigen::MatrixXd::Zero(2, 3);
    zero.trained_on_dims = 3;
    CHECK(predict(zero, random_inputs(5, 3, 1)).cwiseAbs().maxCoeff() == 0.0);

    Readout<double> r;
    r.weights.resize(1, 2);
    r.weights << 2, -1;
    r.trained_on_dims = 2;
    Eigen::MatrixXd state(1, 2);
    state << 3, 4;
    CHECK(predict(r, state)(0, 0) == 2.0);
    CHECK_THROWS_AS(predict(r, Eigen::MatrixXd::Zero(1, 3)), StructuralError);

    // Noiseless linear target is reproduced.
    RegressionProblem<double> p;
    p.states = random_inputs(200, 10, 7);
    const Eigen::MatrixXd w = random_inputs(2, 10, 8);
    p.targets = (p.states * w.transpose()).rowwise() + Eigen::RowVector2d(0.5, -0.25);
    const auto fit = train_ridge(p, 0.0, true);
    const Eigen::MatrixXd out = predict(fit, p.states);
    CHECK(std::sqrt((out - p.targets).squaredNorm() / static_cast<double>(out.size())) <= 1e-8);
}

TEST_CASE("evaluate")
{
    Eigen::MatrixXd target(4, 1);
    target << -2, 2, -2, 2;  // population variance 4
    CHECK(evaluate(target, target, Metric::MSE) == 0.0);
    CHECK(evaluate(target, target, Metric::NRMSE) == 0.0);
    const Eigen::MatrixXd shifted = target.array() + 1.0;
    CHECK(evaluate(shifted, target, Metric::MSE) == doctest::Approx(1.0));
    CHECK(evaluate(shifted, target, Metric::NRMSE) == doctest::Approx(0.5));

    Eigen::MatrixXd onehot = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd scores = onehot * 0.8;
    scores(0, 1) = 0.1;
    CHECK(evaluate(scores, onehot, Metric::Accuracy) == 1.0);
    scores(0, 1) = 0.9;
    CHECK(evaluate(scores, onehot, Metric::Accuracy) == doctest::Approx(2.0 / 3.0));

    CHECK_THROWS_AS(evaluate(target, Eigen::MatrixXd::Ones(4, 1).eval(), Metric::NRMSE), NumericalError);
    CHECK_THROWS_AS(evaluate(target, Eigen::MatrixXd::Ones(3, 1).eval(), Metric::MSE), StructuralError);
}

TEST_CASE("train_ridge errors")
{
    auto p = random_problem(10, 3, 1, 1);
    CHECK_THROWS_AS(train_ridge(p, -1.0), ConfigError);
    p.states(0, 0) = std::nan("");
    CHECK_THROWS_AS(train_ridge(p, 1.0), DataError);
    RegressionProblem<double> misaligned;
    misaligned.states = Eigen::MatrixXd::Zero(5, 2);
    misaligned.targets = Eigen::MatrixXd::Zero(4, 1);
    CHECK_THROWS_AS(train_ridge(misaligned, 1.0), StructuralError);
}

TEST_CASE("normal-equations optimality and explicit-inverse oracle")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (bool intercept : {false, true}) {
            const Eigen::Index dims = 5 + static_cast<Eigen::Index>(seed * 19 % 190);
            const auto p = random_problem(dims * 2 + 10, dims, 3, seed);
            for (double lambda : {1e-6, 1e-2, 1.0}) {
                const auto r = train_ridge(p, lambda, intercept);
                CAPTURE(seed);
                CAPTURE(lambda);
                CHECK(normal_equations_residual(p, r) <= 1e-6);
                const Eigen::MatrixXd oracle = explicit_inverse_solution(p.states, p.targets, lambda, intercept);
                CHECK((r.weights.transpose() - oracle.topRows(dims)).cwiseAbs().maxCoeff() <= 1e-8);
                if (intercept) CHECK((r.intercept->transpose() - oracle.row(dims)).cwiseAbs().maxCoeff() <= 1e-8);
            }
        }
    }
}

TEST_CASE("lambda = 0 on rank-deficient states gives the minimum-norm solution")
{
    RegressionProblem<double> p;
    const Eigen::MatrixXd base = random_inputs(30, 4, 2);
    p.states.resize(30, 6);
    p.states << base, base.col(0) + base.col(1), base.col(2) - base.col(3);
    p.targets = random_inputs(30, 1, 3);
    const auto r = train_ridge(p, 0.0);
    const Eigen::VectorXd pinv = p.states.completeOrthogonalDecomposition().solve(p.targets);
    CHECK((r.weights.transpose() - pinv).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("permuting state columns permutes the weights")
{
    const auto p = random_problem(60, 8, 2, 5);
    const auto r = train_ridge(p, 1e-3, true);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(8);
    perm.indices() << 3, 0, 7, 1, 6, 2, 5, 4;
    RegressionProblem<double> q{p.states * perm, p.targets};
    const auto rq = train_ridge(q, 1e-3, true);
    CHECK((predict(r, p.states) - predict(rq, q.states)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((rq.weights - r.weights * perm).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zeroing the informative layer degrades the fit")
{
    InitConfig cfg;
    cfg.n_layers = 2;
    cfg.units_per_layer = 15;
    cfg.master_seed = 9;
    const auto res = build_reservoir(cfg);
    const auto traj = run(res, random_inputs(400, 1, 4), 50);
    const Eigen::MatrixXd states = traj.post_washout();
    RegressionProblem<double> p;
    p.states = states;
    p.targets = states.leftCols(15) * random_inputs(15, 1, 6);  // read out of layer 1 only
    const double full = evaluate(predict(train_ridge(p, 1e-10), p.states), p.targets, Metric::MSE);
    RegressionProblem<double> cut = p;
    cut.states.leftCols(15).setZero();
    const double without = evaluate(predict(train_ridge(cut, 1e-10), cut.states), cut.targets, Metric::MSE);
    CHECK(without > full);
    CHECK(full < 1e-10);
}
