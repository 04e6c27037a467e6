#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "sparsekern/baselines.hpp"
#include "sparsekern/kernels.hpp"

using namespace sparsekern;
using testing::max_abs_diff;
using testing::random_image;

namespace {

double frobenius(const DenseKernel& a, const DenseKernel& b) { return std::sqrt(kernel_sse(a, b)); }

// sqrt of the discarded eigenvalues of K^T K.
double spectral_tail(const DenseKernel& k, int rank) {
  const int m = k.size(), r = k.radius();
  Eigen::MatrixXd K(m, m);
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) K(j + r, i + r) = k.at(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.transpose() * K);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + m);
  std::sort(ev.rbegin(), ev.rend());
  double tail = 0.0;
  for (int n = rank; n < m; ++n) tail += std::max(0.0, ev[n]);
  return std::sqrt(tail);
}

PstConfig small_pst(int iterations, std::uint64_t seed = 0) {
  PstConfig cfg;
  cfg.chains = 4;
  cfg.iterations = iterations;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("rank one reproduces a gaussian") {
  for (double sigma : {1.0, 3.0, 5.0, 11.0}) {
    const auto g = generate_kernel(KernelSpec::gaussian(sigma));
    const auto f = lowrank_decompose(g, 1);
    CHECK(frobenius(f.reconstruct(), g) < 1e-9);
    CHECK(f.tail_energy() < 1e-9);
  }
}

TEST_CASE("full rank is exact") {
  const auto heart = generate_kernel(parse_kernel_spec("heart:6"));
  const auto f = lowrank_decompose(heart, heart.size());
  CHECK(frobenius(f.reconstruct(), heart) < 1e-9);
  CHECK_THROWS_AS(lowrank_decompose(heart, 0), Error);
  CHECK_THROWS_AS(lowrank_decompose(heart, heart.size() + 1), Error);
}

TEST_CASE("truncation error matches the spectrum of K^T K") {
  const auto ring = generate_kernel(parse_kernel_spec("ring:8:12"));
  const auto f = lowrank_decompose(ring, 2);
  const double err = frobenius(f.reconstruct(), ring);
  CHECK(err == doctest::Approx(spectral_tail(ring, 2)).epsilon(1e-6));
  CHECK(err == doctest::Approx(f.tail_energy()).epsilon(1e-9));
}

TEST_CASE("frobenius error does not grow with rank") {
  for (const char* s : {"ring:8:12", "heart", "star:4", "polygon:6", "disk:9", "gaussian:4"}) {
    CAPTURE(s);
    const auto k = generate_kernel(parse_kernel_spec(s));
    double prev = INFINITY;
    for (int r = 1; r <= std::min(k.size(), 12); ++r) {
      const double e = frobenius(lowrank_decompose(k, r).reconstruct(), k);
      CHECK(e <= prev + 1e-12);
      prev = e;
    }
  }
}

TEST_CASE("separable filtering") {
  const auto g = generate_kernel(KernelSpec::gaussian(2.0));
  const auto img = random_image(40, 33, 1);
  const auto f1 = lowrank_decompose(g, 1);
  CHECK(max_abs_diff(lowrank_filter(img, f1), dense_convolve(img, g)) < 1e-10);

  Image delta(25, 25);
  delta.at(12, 12) = 1.0;
  const auto heart = generate_kernel(parse_kernel_spec("heart:5"));
  const auto f3 = lowrank_decompose(heart, 3);
  const auto rec = f3.reconstruct();
  const auto resp = lowrank_filter(delta, f3);
  for (int j = -rec.radius(); j <= rec.radius(); ++j)
    for (int i = -rec.radius(); i <= rec.radius(); ++i) CHECK(std::abs(resp.at(12 - i, 12 - j) - rec.at(i, j)) < 1e-12);

  const auto rnd = random_image(37, 29, 2);
  CHECK(max_abs_diff(lowrank_filter(rnd, f3), dense_convolve(rnd, rec)) < 1e-10);
}

TEST_CASE("binned low-rank terms") {
  const auto g = generate_kernel(KernelSpec::gaussian(2.0));
  const auto f = lowrank_decompose(g, 1);
  // one tap per pixel is the factor itself
  const auto exact = lowrank_sparse_terms(f, g.size());
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].layers.size() == 2);
  CHECK(frobenius(synthesize_ir(exact[0]), g) < 1e-12);
  // fewer taps keep the mass
  const auto coarse = lowrank_sparse_terms(f, 4);
  CHECK(coarse[0].layers[0].samples.size() == 4);
  CHECK(synthesize_ir(coarse[0]).sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& s : coarse[0].layers[0].samples) CHECK(s.offset.x == 0.0);
  for (const auto& s : coarse[0].layers[1].samples) CHECK(s.offset.y == 0.0);
  CHECK_THROWS_AS(lowrank_sparse_terms(f, 0), Error);
}

TEST_CASE("swap probability") {
  // a lower energy in the hotter chain always moves down the ladder
  CHECK(swap_probability(1.0, 1.0, 0.1, 5.0) == 1.0);
  CHECK(swap_probability(1.0, 5.0, 0.1, 1.0) == doctest::Approx(std::exp(-36.0)));
  CHECK(swap_probability(1.0, 2.0, 0.5, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(swap_probability(2.0, 3.0, 2.0, 1.0) == 1.0);
}

TEST_CASE("zero-temperature tempering is greedy") {
  const auto g = generate_kernel(KernelSpec::gaussian(3.0));
  PstConfig cfg = small_pst(300, 4);
  cfg.t_max = cfg.t_min = 1e-12;
  const auto r = pst_fit(g, parse_layout("4x4"), cfg, {InitKind::hybrid, 4});
  REQUIRE(r.trace.size() == 301);
  double prev_sum = INFINITY;
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].best_energy <= r.trace[i - 1].best_energy);
    double sum = 0.0;
    for (double e : r.trace[i].chain_energies) sum += e;
    // each chain only moves downhill and swaps permute states
    CHECK(sum <= prev_sum * (1 + 1e-12));
    prev_sum = sum;
  }
  CHECK(r.best_energy < r.trace.front().best_energy);
}

TEST_CASE("tempering is deterministic and reports consistent energies") {
  const auto ring = generate_kernel(parse_kernel_spec("ring:8:12"));
  const auto a = pst_fit(ring, parse_layout("3x4"), small_pst(200, 9), {InitKind::hybrid, 9});
  const auto b = pst_fit(ring, parse_layout("3x4"), small_pst(200, 9), {InitKind::hybrid, 9});
  CHECK(a.theta == b.theta);
  CHECK(a.best_energy == b.best_energy);
  CHECK(a.evaluations == b.evaluations);
  CHECK(a.best_energy == doctest::Approx(loss(synthesize_ir(a.theta), ring, {})).epsilon(1e-9));
  for (const auto& l : a.theta.layers) CHECK(l.weight_sum() == doctest::Approx(1.0).epsilon(1e-12));
  const auto c = pst_fit(ring, parse_layout("3x4"), small_pst(200, 10), {InitKind::hybrid, 9});
  CHECK(!(a.theta == c.theta));
}

TEST_CASE("tempering ladder and validation") {
  const auto g = generate_kernel(KernelSpec::gaussian(2.0));
  PstConfig cfg = small_pst(0);
  cfg.chains = 5;
  const auto r = pst_fit(g, parse_layout("2x2"), cfg, {});
  REQUIRE(r.temperatures.size() == 5);
  const double e0 = r.trace.front().best_energy;
  CHECK(r.temperatures.front() == doctest::Approx(1e-2 * e0));
  CHECK(r.temperatures.back() == doctest::Approx(1e-6 * e0));
  for (std::size_t c = 1; c < 5; ++c)
    CHECK(r.temperatures[c] / r.temperatures[c - 1] == doctest::Approx(std::pow(1e-4, 0.25)));

  PstConfig bad = small_pst(10);
  bad.chains = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small_pst(10);
  bad.weight_norm = WeightNorm::softmax;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small_pst(10);
  bad.t_max = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
