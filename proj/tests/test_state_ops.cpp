#include <catch2/catch_amalgamated.hpp>

#include "qicloak/engine.hpp"
#include "qicloak/fock/measurement.hpp"
#include "qicloak/fock/operators.hpp"
#include "qicloak/fock/state.hpp"

using namespace qicloak;
using namespace qicloak::fock;

namespace {
// Keeps the requested dims exactly (the default policy grows them until the
// truncation tail target is met).
const TruncationPolicy pin{2.0, kDefaultSideCap, true};
}  // namespace

TEST_CASE("attaching a mode concatenates dims and multiplies traces") {
  auto a = make_coherent(0.3, 8);
  a.rescale_trace(0.5);
  auto b = make_thermal(0.4, 10, pin);
  const auto joint = attach_mode(a, b, 1 << 20);
  CHECK(joint.mode_dims() == std::vector<int>{8, 10});
  CHECK(joint.trace() == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(joint.tail_mass() == Catch::Approx(a.tail_mass() + b.tail_mass()));
  CHECK_THROWS_AS(attach_mode(a, b, 16), CapacityError);
}

TEST_CASE("tracing one arm of a squeezed pair leaves a thermal state") {
  const double N = 0.2;
  const auto pair = make_tmsv(N, 18);
  const auto left = partial_trace(pair, {0});
  const auto right = partial_trace(pair, {1});
  const auto ref = make_thermal(N, 18);
  CHECK((left.density() - ref.density()).norm() < 1e-11);
  CHECK((right.density() - ref.density()).norm() < 1e-11);
}

TEST_CASE("partial trace keeps the requested mode order") {
  auto s = attach_mode(make_coherent(0.5, 6, pin), make_coherent(0.2, 7, pin), 1 << 20);
  const auto swapped = partial_trace(attach_mode(s, make_vacuum(3), 1 << 20), {1, 0});
  CHECK(swapped.mode_dims() == std::vector<int>{7, 6});
  const std::vector<int> dims{7, 6};
  const auto n0 = expectation(swapped, embed(number_matrix(7), dims, 0));
  CHECK(n0.real() == Catch::Approx(0.04).epsilon(1e-9));
}

TEST_CASE("padding a mode preserves the physics") {
  auto s = make_tmsv(0.3, 12, pin);
  const auto padded = pad_mode(s, 0, 20, 1 << 20);
  CHECK(padded.mode_dims() == std::vector<int>{20, 12});
  CHECK(padded.trace() == Catch::Approx(s.trace()).epsilon(1e-13));
  const auto n = expectation(padded, embed(number_matrix(20), {20, 12}, 0));
  const auto n_ref = expectation(s, embed(number_matrix(12), {12, 12}, 0));
  CHECK(n.real() == Catch::Approx(n_ref.real()).epsilon(1e-13));
}

TEST_CASE("column pruning drops at most the requested mass") {
  auto s = attach_mode(make_thermal(1.2, 24), make_thermal(0.7, 16), 1 << 20);
  const double before = s.trace();
  const auto pruned = engine::detail::prune_columns(s, 1e-6);
  CHECK(pruned.rank() < s.rank());
  CHECK(pruned.trace() == Catch::Approx(before).epsilon(1e-12));
  CHECK(pruned.tail_mass() <= s.tail_mass() + 1e-6);
  // Bulk structure survives: mean photon number moves by less than the budget
  // allows after rescaling.
  const std::vector<int> dims = pruned.mode_dims();
  const auto n0 = expectation(pruned, embed(number_matrix(dims[0]), dims, 0));
  CHECK(n0.real() == Catch::Approx(1.2).epsilon(1e-4));
}

TEST_CASE("observable moments agree with direct operator averages") {
  auto s = attach_mode(make_coherent(0.4, 9, pin), make_thermal(0.5, 9, pin), 1 << 20);
  s = apply_channel(s, {ChannelKind::BeamSplitter, {0, 1}, 0.8});
  const Dense a = annihilation_matrix(9);
  const Dense corr = kron(a, a) + kron(a, a).adjoint();
  const Sparse op = to_sparse(corr);
  const auto m = moments(s, op, {0, 1});
  const auto direct1 = expectation(s, ModeOperator({9, 9}, corr));
  const auto direct2 = expectation(s, ModeOperator({9, 9}, Dense(corr * corr)));
  CHECK(m.mean == Catch::Approx(direct1.real()).epsilon(1e-12));
  CHECK(m.second == Catch::Approx(direct2.real()).epsilon(1e-12));
}

TEST_CASE("moments on a mode subset match the embedded operator") {
  auto s = attach_mode(attach_mode(make_coherent(0.3, 6, pin), make_thermal(0.4, 5, pin), 1 << 20),
                       make_coherent(0.2, 4, pin), 1 << 20);
  const Sparse op = to_sparse(number_matrix(5));
  const auto m = moments(s, op, {1});
  const auto ref = expectation(s, embed(number_matrix(5), s.mode_dims(), 1));
  CHECK(m.mean == Catch::Approx(ref.real()).epsilon(1e-12));
}

TEST_CASE("diagonal moments equal sparse moments for number-type observables") {
  auto s = attach_mode(make_thermal(0.9, 10), make_coherent(0.5, 8), 1 << 20);
  const Eigen::VectorXd w = mode_number_weights(s.mode_dims(), {2.0, -3.0});
  const auto fast = diagonal_moments(s, w);
  const Sparse op = to_sparse(Dense(w.cast<Complex>().asDiagonal()));
  const auto slow = moments(s, op, {0, 1});
  CHECK(fast.mean == Catch::Approx(slow.mean).epsilon(1e-12));
  CHECK(fast.second == Catch::Approx(slow.second).epsilon(1e-12));
}

TEST_CASE("mode number weights follow the slow-to-fast flattening") {
  const Eigen::VectorXd w = mode_number_weights({3, 4}, {2.0, -3.0});
  REQUIRE(w.size() == 12);
  // Index (n0, n1) flattens to n0 * 4 + n1.
  CHECK(w[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(w[1] == Catch::Approx(-3.0));
  CHECK(w[4] == Catch::Approx(2.0));
  CHECK(w[11] == Catch::Approx(2.0 * 2 - 3.0 * 3));
}

TEST_CASE("entry budget blocks factor allocations that cannot fit") {
  // Side stays under the side cap; side * rank is what explodes here.
  const auto hot = make_thermal(5.0, 700, pin);
  CHECK_THROWS_AS(attach_mode(hot, hot, kDefaultSideCap), CapacityError);
}

TEST_CASE("moments reject non-hermitian observables") {
  auto s = make_coherent(0.4, 6, pin);
  const Sparse bad = to_sparse(annihilation_matrix(6));
  CHECK_THROWS_AS(moments(s, bad, {0}), InvalidParameterError);
}
