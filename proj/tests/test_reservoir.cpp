#include "doctest.h"

#include "deepesn/Init.hpp"
#include "deepesn/Reservoir.hpp"
#include "naive_reference.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace deepesn;
using deepesn::testing::random_config;
using deepesn::testing::random_inputs;
using deepesn::testing::scalar_layer;

namespace {

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m)
{
    std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
    for (int t = 0; t < m.rows(); ++t)
        for (int j = 0; j < m.cols(); ++j) out[t][j] = m(t, j);
    return out;
}

/// Max-abs difference to the naive oracle; with `relative`, divided by the
/// largest state magnitude seen.
double max_abs_vs_naive(const DeepReservoir<double>& res, const Eigen::MatrixXd& inputs, bool relative = false)
{
    const auto traj = run(res, inputs);
    const auto ref = deepesn::testing::naive_run(deepesn::testing::to_naive(res), rows_of(inputs));
    double worst = 0.0;
    for (int t = 0; t < traj.steps(); ++t)
        for (int j = 0; j < traj.states.cols(); ++j) worst = std::max(worst, std::abs(traj.states(t, j) - ref[t][j]));
    return relative ? worst / std::max(1.0, traj.states.cwiseAbs().maxCoeff()) : worst;
}

} // namespace

TEST_CASE("step_first_layer scalar examples")
{
    const auto zero_layer = scalar_layer(0.5, 0.3, 1.0);
    CHECK(step_first_layer(zero_layer, vec1(0.0), vec1(0.0))(0) == 0.0);

    const auto layer = scalar_layer(0.5, 0.3, 1.0);
    const double x1 = step_first_layer(layer, vec1(1.0), vec1(0.0))(0);
    CHECK(x1 == doctest::Approx(0.46211715726000974).epsilon(1e-14));

    const auto leaky = scalar_layer(0.5, 0.3, 0.8);
    const double x2 = step_first_layer(leaky, vec1(1.0), vec1(x1))(0);
    CHECK(x2 == doctest::Approx(0.6563929552347646).epsilon(1e-14));
}

TEST_CASE("step_higher_layer examples")
{
    const auto layer = scalar_layer(1.0, 0.5, 0.5);
    CHECK(step_higher_layer(layer, vec1(0.0), vec1(0.0))(0) == 0.0);
    CHECK(step_higher_layer(layer, vec1(0.46211715726000974), vec1(0.0))(0) ==
          doctest::Approx(0.4318081805950961).epsilon(1e-14));

    LayerSpec<double> pass;
    pass.units = 3;
    pass.leak_rate = 1.0;
    pass.activation = Activation::Identity;
    pass.input_weights = WeightMatrix<double>(Eigen::MatrixXd::Identity(3, 3));
    pass.recurrent_weights = WeightMatrix<double>(Eigen::MatrixXd::Zero(3, 3));
    const Eigen::Vector3d below(0.3, -1.7, 2.5);
    const Eigen::VectorXd out = step_higher_layer(pass, below, Eigen::Vector3d(9.0, 9.0, 9.0));
    CHECK(out == Eigen::VectorXd(below));
}

TEST_CASE("layer errors")
{
    const auto layer = scalar_layer(0.5, 0.3, 1.0);
    CHECK_THROWS_AS(step_first_layer(layer, Eigen::Vector2d(1.0, 2.0), vec1(0.0)), StructuralError);
    CHECK_THROWS_AS(step_first_layer(layer, vec1(0.0), Eigen::Vector2d(0.0, 0.0)), StructuralError);
    CHECK_THROWS_AS(step_first_layer(layer, vec1(std::nan("")), vec1(0.0)), DataError);
    CHECK_THROWS_AS(step_first_layer(layer, vec1(INFINITY), vec1(0.0)), DataError);

    auto bad_leak = layer;
    bad_leak.leak_rate = 1.5;
    CHECK_THROWS_AS(DeepReservoir<double>(1, {bad_leak}), ConfigError);
    CHECK_THROWS_AS(DeepReservoir<double>(2, {layer}), StructuralError);
    CHECK_THROWS_AS(DeepReservoir<double>(1, {}), StructuralError);
}

TEST_CASE("step_global reads the current state of the layer below")
{
    const DeepReservoir<double> res(1, {scalar_layer(0.5, 0.3, 1.0), scalar_layer(1.0, 0.5, 0.5)});
    const auto s = step_global(res, vec1(1.0), GlobalState<double>::zero(res.layout()));
    CHECK(s.per_layer[0](0) == doctest::Approx(0.46211715726000974).epsilon(1e-14));
    // Layer 2 sees layer 1's value at this step, not the zero it held before.
    CHECK(s.per_layer[1](0) == doctest::Approx(0.4318081805950961).epsilon(1e-14));

    auto wrong = GlobalState<double>::zero({1});
    CHECK_THROWS_AS(step_global(res, vec1(1.0), wrong), StructuralError);
}

TEST_CASE("errors carry the layer index")
{
    const DeepReservoir<double> res(1, {scalar_layer(0.5, 0.3, 1.0), scalar_layer(1.0, 0.5, 0.5)});
    GlobalState<double> bad = GlobalState<double>::zero(res.layout());
    bad.per_layer[1] = Eigen::VectorXd::Zero(2);
    try {
        step_global(res, vec1(1.0), bad);
        FAIL("expected a structural error");
    } catch (const StructuralError& e) {
        CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
    }
}

TEST_CASE("zero preservation with bias disabled")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto cfg = random_config(seed);
        const auto res = build_reservoir(cfg).without_bias();
        const auto traj = run(res, Eigen::MatrixXd::Zero(50, cfg.input_dim));
        CHECK(traj.states.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("depth one equals a shallow ESN update")
{
    auto cfg = random_config(7, 1);
    cfg.n_layers = 1;
    const auto res = build_reservoir(cfg);
    const auto inputs = random_inputs(300, cfg.input_dim, 3);
    const auto traj = run(res, inputs);

    const auto& l = res.layer(0);
    const Eigen::MatrixXd win = l.input_weights.to_dense();
    const Eigen::MatrixXd wrec = l.recurrent_weights.to_dense();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(l.units);
    double worst = 0.0;
    for (int t = 0; t < inputs.rows(); ++t) {
        Eigen::VectorXd pre = win * inputs.row(t).transpose() + wrec * x + *l.bias;
        if (l.activation == Activation::Tanh) pre = pre.array().tanh();
        x = (1.0 - l.leak_rate) * x + pre;
        worst = std::max(worst, (traj.states.row(t).transpose() - x).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("unit leak has no carry-over")
{
    auto cfg = random_config(11, 3);
    cfg.leak_rates = {1.0};
    cfg.spectral_radius_targets = {0.9};
    const auto res = build_reservoir(cfg);
    const auto inputs = random_inputs(40, cfg.input_dim, 5);
    const auto traj = run(res, inputs);
    for (int t = 1; t < traj.steps(); ++t) {
        const auto prev = traj.state(t - 1);
        const auto now = traj.state(t);
        for (std::size_t i = 0; i < res.num_layers(); ++i) {
            const auto& l = res.layer(i);
            const Eigen::VectorXd in = i == 0 ? Eigen::VectorXd(inputs.row(t).transpose()) : now.per_layer[i - 1];
            Eigen::VectorXd expect = l.input_weights.to_dense() * in + l.recurrent_weights.to_dense() * prev.per_layer[i] + *l.bias;
            if (l.activation == Activation::Tanh) expect = expect.array().tanh();
            CHECK((now.per_layer[i] - expect).cwiseAbs().maxCoeff() <= 1e-13);
        }
    }
}

TEST_CASE("optimized stepping matches the naive reference over seeds")
{
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto cfg = random_config(seed, 8, 5, 50, Activation::Tanh);
        const auto res = build_reservoir(cfg);
        const auto inputs = random_inputs(1000, cfg.input_dim, seed + 1);
        CAPTURE(seed);
        CHECK(max_abs_vs_naive(res, inputs) <= 1e-12);
    }
    // Linear stacks are unbounded, so compare relative to the state scale.
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto cfg = random_config(seed, 8, 5, 50, Activation::Identity);
        const auto res = build_reservoir(cfg);
        CAPTURE(seed);
        CHECK(max_abs_vs_naive(res, random_inputs(1000, cfg.input_dim, seed + 1), true) <= 1e-12);
    }
}

TEST_CASE("run composes")
{
    const auto cfg = random_config(21, 4);
    const auto res = build_reservoir(cfg);
    const auto inputs = random_inputs(120, cfg.input_dim, 8);
    const auto whole = run(res, inputs);
    const auto first = run(res, inputs.topRows(70));
    const auto second = run(res, inputs.bottomRows(50), first.state(69));
    CHECK((whole.states.bottomRows(50) - second.states).cwiseAbs().maxCoeff() <= 1e-12);

    const auto one = run(res, inputs.topRows(1));
    const auto stepped = step_global(res, inputs.row(0).transpose(), GlobalState<double>::zero(res.layout()));
    CHECK((one.states.row(0).transpose() - concat_state(stepped)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("run errors")
{
    const auto res = build_reservoir(random_config(3, 2));
    CHECK_THROWS_AS(run(res, Eigen::MatrixXd(0, res.input_dim())), DataError);
    CHECK_THROWS_AS(run(res, Eigen::MatrixXd::Zero(10, res.input_dim()), 10), ConfigError);
    CHECK_THROWS_AS(run(res, Eigen::MatrixXd::Zero(10, res.input_dim() + 1)), StructuralError);
    const auto traj = run(res, Eigen::MatrixXd::Zero(10, res.input_dim()), 4);
    CHECK(traj.washout == 4);
    CHECK(traj.steps() == 10);

    // 1e3^t overflows a double after about 103 steps.
    const DeepReservoir<double> exploding(1, {deepesn::testing::scalar_layer(1.0, 1e3, 1.0, Activation::Identity)});
    CHECK_THROWS_WITH_AS(run(exploding, Eigen::MatrixXd::Ones(200, 1)), doctest::Contains("step 10"),
                         NumericalError);
}

TEST_CASE("constant input on a contractive reservoir reaches a fixed point")
{
    InitConfig cfg;
    cfg.n_layers = 3;
    cfg.units_per_layer = 20;
    cfg.spectral_radius_targets = {0.5};
    cfg.input_scaling = 0.5;
    cfg.inter_layer_scaling = 0.5;
    cfg.master_seed = 42;
    const auto res = build_reservoir(cfg);
    const auto traj = run(res, Eigen::MatrixXd::Constant(1000, 1, 0.7));
    const double late = (traj.states.row(999) - traj.states.row(998)).norm();
    const double early = (traj.states.row(20) - traj.states.row(19)).norm();
    CHECK(late < 1e-10);
    CHECK(late < early);
}

TEST_CASE("concat and split")
{
    GlobalState<double> s;
    s.per_layer = {Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)};
    CHECK(concat_state(s) == Eigen::Vector4d(1, 2, 3, 4));
    GlobalState<double> one;
    one.per_layer = {Eigen::Vector3d(5, 6, 7)};
    CHECK(concat_state(one) == Eigen::Vector3d(5, 6, 7));

    const Eigen::VectorXd flat = random_inputs(1, 12, 4).row(0).transpose();
    const LayerLayout layout{3, 5, 4};
    CHECK(concat_state(split_state(flat, layout)) == flat);
    CHECK_THROWS_AS(split_state(flat, LayerLayout{3, 3}), StructuralError);
}

TEST_CASE("perturbing layer i leaves lower layers unchanged")
{
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
        auto cfg = random_config(seed, 5);
        cfg.n_layers = std::max<std::size_t>(cfg.n_layers, 2);
        cfg.leak_rates = {cfg.leak_rates.front()};
        cfg.spectral_radius_targets = {cfg.spectral_radius_targets.front()};
        const auto res = build_reservoir(cfg);
        const auto inputs = random_inputs(200, cfg.input_dim, seed);
        const auto base = run(res, inputs);
        for (std::size_t i = 0; i < res.num_layers(); ++i) {
            auto init = GlobalState<double>::zero(res.layout());
            init.per_layer[i].setConstant(0.5);
            const auto pert = run(res, inputs, init);
            const Eigen::Index lower = layer_offset(res.layout(), i);
            if (lower > 0) CHECK((pert.states.leftCols(lower) - base.states.leftCols(lower)).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("input reaches higher layers only through layer one")
{
    for (std::uint64_t seed = 50; seed < 55; ++seed) {
        auto cfg = random_config(seed, 6);
        auto res = build_reservoir(cfg).without_bias();
        auto layers = res.layers();
        layers[0].input_weights = WeightMatrix<double>(Eigen::MatrixXd::Zero(layers[0].units, cfg.input_dim));
        const DeepReservoir<double> cut(cfg.input_dim, layers);
        const auto traj = run(cut, random_inputs(100, cfg.input_dim, seed));
        CHECK(traj.states.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("leaky tanh states stay within 1/a from a zero start")
{
    for (std::uint64_t seed = 60; seed < 70; ++seed) {
        const auto cfg = random_config(seed, 4);
        if (cfg.activation != Activation::Tanh) continue;
        const auto res = build_reservoir(cfg);
        const auto traj = run(res, random_inputs(500, cfg.input_dim, seed, 3.0));
        CHECK(traj.states.allFinite());
        for (std::size_t i = 0; i < res.num_layers(); ++i) {
            const double bound = 1.0 / res.layer(i).leak_rate;
            const Eigen::Index off = layer_offset(traj.layout, i);
            CHECK(traj.states.middleCols(off, traj.layout[i]).cwiseAbs().maxCoeff() <= bound);
        }
    }
}

TEST_CASE("dense and sparse storage step identically up to rounding")
{
    auto cfg = random_config(77, 3);
    cfg.recurrent_density = 0.3;
    const auto sparse_res = build_reservoir(cfg);
    REQUIRE(sparse_res.layer(0).recurrent_weights.is_sparse());
    auto layers = sparse_res.layers();
    for (auto& l : layers) l.recurrent_weights = WeightMatrix<double>(l.recurrent_weights.to_dense());
    const DeepReservoir<double> dense_res(cfg.input_dim, layers);
    const auto inputs = random_inputs(300, cfg.input_dim, 1);
    CHECK((run(sparse_res, inputs).states - run(dense_res, inputs).states).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("float instantiation")
{
    const DeepReservoir<float> res(1, {[] {
                                       LayerSpec<float> l;
                                       l.units = 1;
                                       l.input_weights = WeightMatrix<float>(Eigen::MatrixXf::Constant(1, 1, 0.5f));
                                       l.recurrent_weights = WeightMatrix<float>(Eigen::MatrixXf::Constant(1, 1, 0.3f));
                                       return l;
                                   }()});
    const auto traj = run(res, Eigen::MatrixXf::Ones(2, 1));
    CHECK(traj.states(0, 0) == doctest::Approx(0.46211715726000974f));
}
