#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "sparsekern/svfilter.hpp"

using namespace sparsekern;
using testing::max_abs_diff;
using testing::random_image;

namespace {

BasisBuildOptions quick(int steps, bool warm = true) {
  BasisBuildOptions o;
  o.train.steps = steps;
  o.warm_start = warm;
  return o;
}

const FilterBasis& small_basis() {
  static const FilterBasis b = [] {
    const std::vector<double> params{2.0, 3.0, 4.0};
    return build_basis(named_family("gaussian"), params, parse_layout("4x4"), quick(150));
  }();
  return b;
}

Image constant(int w, int h, double v) { return Image(w, h, v); }

int total_reach(const KernelComplex& c) {
  int r = 0;
  for (const auto& l : c.layers) r += static_cast<int>(std::ceil(l.reach())) + 1;
  return r;
}

double mean_adjacent_offset_distance(const FilterBasis& b) {
  double acc = 0.0;
  int n = 0;
  for (std::size_t k = 1; k < b.filters.size(); ++k)
    for (std::size_t l = 0; l < b.filters[k].layers.size(); ++l)
      for (std::size_t i = 0; i < b.filters[k].layers[l].samples.size(); ++i) {
        const auto a = b.filters[k - 1].layers[l].samples[i].offset, c = b.filters[k].layers[l].samples[i].offset;
        acc += std::hypot(a.x - c.x, a.y - c.y);
        ++n;
      }
  return acc / n;
}

}  // namespace

TEST_CASE("interpolation weights") {
  const std::vector<double> p{5, 7, 9, 11};
  CHECK(interp_weights(7, p) == std::vector<double>{0, 1, 0, 0});
  CHECK(interp_weights(6, p) == std::vector<double>{0.5, 0.5, 0, 0});
  CHECK(interp_weights(1, p) == std::vector<double>{1, 0, 0, 0});
  CHECK(interp_weights(40, p) == std::vector<double>{0, 0, 0, 1});
  for (double q = 3.0; q < 13.0; q += 0.37) {
    const auto a = interp_weights(q, p);
    double s = 0.0;
    int nz = 0;
    for (double v : a) {
      CHECK(v >= 0.0);
      s += v;
      nz += v != 0.0;
    }
    CHECK(std::abs(s - 1.0) < 1e-15);
    CHECK(nz <= 2);
  }
  const std::vector<double> one{3.0};
  CHECK(interp_weights(8, one) == std::vector<double>{1});
  const auto b = bracket(8.0, p);
  CHECK(b.lo == 1);
  CHECK(b.hi == 2);
  CHECK(b.alpha_lo == doctest::Approx(0.5));
}

TEST_CASE("synthesize filter") {
  KernelComplex f1{{SparseLayer{{{{2, 0}, 0.2}}}}}, f2{{SparseLayer{{{{4, 0}, 0.6}}}}};
  const std::vector<KernelComplex> fs{f1, f2};
  const std::vector<double> half{0.5, 0.5}, first{1.0, 0.0};
  const auto mid = synthesize_filter(half, fs);
  CHECK(mid.layers[0].samples[0].offset == Vec2{3, 0});
  CHECK(mid.layers[0].samples[0].weight == doctest::Approx(0.4));
  CHECK(synthesize_filter(first, fs) == f1);

  const auto& b = small_basis();
  for (std::size_t k = 0; k < b.filters.size(); ++k) {
    std::vector<double> a(b.filters.size(), 0.0);
    a[k] = 1.0;
    CHECK(synthesize_filter(a, b) == b.filters[k]);
  }
  // linear in alpha, weights stay between the slot extremes
  const std::vector<double> a{0.2, 0.5, 0.3}, c{0.6, 0.1, 0.3};
  const double lam = 0.35;
  std::vector<double> mix(3);
  for (int i = 0; i < 3; ++i) mix[i] = lam * a[i] + (1 - lam) * c[i];
  const auto fa = synthesize_filter(a, b), fc = synthesize_filter(c, b), fm = synthesize_filter(mix, b);
  for (std::size_t l = 0; l < fm.layers.size(); ++l)
    for (std::size_t i = 0; i < fm.layers[l].samples.size(); ++i) {
      const auto& m = fm.layers[l].samples[i];
      CHECK(m.offset.x == doctest::Approx(lam * fa.layers[l].samples[i].offset.x + (1 - lam) * fc.layers[l].samples[i].offset.x));
      CHECK(m.offset.y == doctest::Approx(lam * fa.layers[l].samples[i].offset.y + (1 - lam) * fc.layers[l].samples[i].offset.y));
      CHECK(m.weight == doctest::Approx(lam * fa.layers[l].samples[i].weight + (1 - lam) * fc.layers[l].samples[i].weight));
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& f : b.filters) {
        lo = std::min(lo, f.layers[l].samples[i].weight);
        hi = std::max(hi, f.layers[l].samples[i].weight);
      }
      CHECK(m.weight >= lo - 1e-15);
      CHECK(m.weight <= hi + 1e-15);
    }
  const std::vector<double> bad{0.7, 0.7, -0.4};
  CHECK_THROWS_AS(synthesize_filter(bad, b), Error);
  const std::vector<double> short_alpha{1.0};
  CHECK_THROWS_AS(synthesize_filter(short_alpha, b), Error);
}

TEST_CASE("synthesized offsets are linear in p between knots") {
  const auto& b = small_basis();
  auto at = [&](double p) { return synthesize_filter(interp_weights(p, b.params), b); };
  const auto f0 = at(2.0), f1 = at(2.5), f2 = at(2.75);
  for (std::size_t l = 0; l < f0.layers.size(); ++l)
    for (std::size_t i = 0; i < f0.layers[l].samples.size(); ++i) {
      const double x0 = f0.layers[l].samples[i].offset.x, x1 = f1.layers[l].samples[i].offset.x;
      const double x2 = f2.layers[l].samples[i].offset.x;
      CHECK(x2 - x0 == doctest::Approx(1.5 * (x1 - x0)).epsilon(1e-9));
    }
}

TEST_CASE("gaussian basis entries are normalized") {
  const std::vector<double> params{5, 7, 9, 11};
  const auto b = build_basis(named_family("gaussian"), params, parse_layout("4x4"), quick(40));
  REQUIRE(b.filters.size() == 4);
  CHECK(b.params == params);
  for (const auto& f : b.filters) CHECK(synthesize_ir(f).sum() == doctest::Approx(1.0).epsilon(1e-6));
  const std::vector<double> unordered{5, 4};
  CHECK_THROWS_AS(build_basis(named_family("gaussian"), unordered, parse_layout("2x2"), quick(5)), Error);
}

TEST_CASE("warm start keeps adjacent entries closer") {
  const std::vector<double> params{3, 4, 5, 6};
  const auto warm = build_basis(named_family("gaussian"), params, parse_layout("4x4"), quick(150, true));
  const auto cold = build_basis(named_family("gaussian"), params, parse_layout("4x4"), quick(150, false));
  CHECK(mean_adjacent_offset_distance(warm) <= mean_adjacent_offset_distance(cold));
}

TEST_CASE("constant maps reduce to uniform filtering") {
  const auto& b = small_basis();
  const auto img = random_image(48, 40, 3);
  for (std::size_t k = 0; k < b.params.size(); ++k) {
    const auto sv = sv_filter(img, b, constant(48, 40, b.params[k]));
    CHECK(max_abs_diff(sv, apply_complex(img, b.filters[k])) < 1e-10);
  }
  // a single-entry basis ignores the map
  FilterBasis one{{3.0}, {b.filters[1]}};
  auto ramp = random_image(48, 40, 4, 0.0, 10.0);
  CHECK(max_abs_diff(sv_filter(img, one, ramp), apply_complex(img, b.filters[1])) < 1e-10);
  CHECK_THROWS_AS(sv_filter(img, b, Image(3, 3)), Error);
}

TEST_CASE("piecewise-constant maps match uniform filtering inside each region") {
  const auto& b = small_basis();
  const int w = 96, h = 40;
  const auto img = random_image(w, h, 5);
  Image pmap(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) pmap.at(x, y) = x < w / 2 ? b.params[0] : b.params[2];
  const auto sv = sv_filter(img, b, pmap);
  const auto left = apply_complex(img, b.filters[0]), right = apply_complex(img, b.filters[2]);
  const int margin = std::max(total_reach(b.filters[0]), total_reach(b.filters[2]));
  REQUIRE(margin < w / 4);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w / 2 - margin; ++x) CHECK(std::abs(sv.at(x, y) - left.at(x, y)) < 1e-10);
    for (int x = w / 2 + margin; x < w; ++x) CHECK(std::abs(sv.at(x, y) - right.at(x, y)) < 1e-10);
  }
}

TEST_CASE("ground truth") {
  const auto family = named_family("gaussian");
  const auto img = random_image(30, 26, 6);
  const auto gt = sv_ground_truth(img, family, constant(30, 26, 2.5));
  CHECK(max_abs_diff(gt, dense_convolve(img, generate_kernel(family(2.5)))) < 1e-12);

  Image delta(41, 41);
  delta.at(20, 20) = 1.0;
  const auto pmap = random_image(41, 41, 7, 1.0, 3.0);
  const auto out = sv_ground_truth(delta, family, pmap);
  for (auto [px, py] : {std::pair{20, 20}, std::pair{17, 22}, std::pair{24, 15}}) {
    const auto k = generate_kernel(family(pmap.at(px, py)));
    CHECK(out.at(px, py) == doctest::Approx(k.get(20 - px, 20 - py)).epsilon(1e-12));
  }
}

TEST_CASE("two-parameter basis") {
  const std::vector<double> ps{6.0, 8.0}, qs{0.0, 0.4};
  const auto b = build_basis_2d(named_family_2d("star:4"), ps, qs, parse_layout("3x4"), quick(60));
  REQUIRE(b.filters.size() == 4);
  const auto img = random_image(40, 40, 8);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const auto sv = sv_filter_2d(img, b, constant(40, 40, ps[i]), constant(40, 40, qs[j]));
      CHECK(max_abs_diff(sv, apply_complex(img, b.at(i, j))) < 1e-10);
    }
  const auto gt = sv_ground_truth_2d(img, named_family_2d("star:4"), constant(40, 40, 7.0), constant(40, 40, 0.2));
  CHECK(max_abs_diff(gt, dense_convolve(img, generate_kernel(family_member("star:4", 7.0, 0.2)))) < 1e-12);
}

TEST_CASE("low-rank comparison bases") {
  const std::vector<double> params{2.0, 3.0};
  const auto lr = build_lowrank_basis(named_family("ring"), params, 2);
  const auto img = random_image(36, 30, 9);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto pm = constant(36, 30, params[k]);
    CHECK(max_abs_diff(sv_lowrank_filter(img, lr, pm), lowrank_filter(img, lr.filters[k])) < 1e-10);
  }
  // one tap per factor entry of the widest entry is its exact separable filter
  const auto terms = lowrank_sparse_basis(lr, lr.filters[1].size);
  CHECK(terms.size() == 2);
  CHECK(max_abs_diff(sv_filter_sum(img, terms, constant(36, 30, params[1])), lowrank_filter(img, lr.filters[1])) < 1e-10);
}

TEST_CASE("parameter maps scale linearly") {
  Image unit(3, 1);
  unit.at(0, 0) = 0.0;
  unit.at(1, 0) = 0.5;
  unit.at(2, 0) = 1.0;
  const auto p = scale_parameter_map(unit, 5.0, 11.0);
  CHECK(p.at(0, 0) == 5.0);
  CHECK(p.at(1, 0) == 8.0);
  CHECK(p.at(2, 0) == 11.0);
}
