#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "impulse.hpp"
#include "sparsekern/baselines.hpp"

namespace sparsekern {

void PstConfig::validate() const {
  if (chains < 2) throw Error(Errc::parameter, "parallel tempering needs at least 2 chains");
  if (iterations < 0) throw Error(Errc::parameter, "iterations must be >= 0");
  if ((t_max == 0.0) != (t_min == 0.0)) throw Error(Errc::parameter, "set both t_max and t_min, or neither");
  if (t_max != 0.0 && !(t_min > 0.0 && t_max >= t_min))
    throw Error(Errc::parameter, "temperature ladder needs t_max >= t_min > 0");
  if (offset_sigma < 0.0 || !(weight_sigma >= 0.0)) throw Error(Errc::parameter, "mutation scales must be >= 0");
  if (swap_interval < 1) throw Error(Errc::parameter, "swap interval must be >= 1");
  if (weight_norm == WeightNorm::softmax) throw Error(Errc::parameter, "tempering supports none or sum weight normalization");
  if (loss.type == LossType::charbonnier && !(loss.epsilon > 0.0))
    throw Error(Errc::parameter, "charbonnier epsilon must be positive");
}

double swap_probability(double t_a, double e_a, double t_b, double e_b) {
  const double x = (1.0 / t_a - 1.0 / t_b) * (e_a - e_b);
  if (std::isnan(x)) return 0.0;
  return x >= 0.0 ? 1.0 : std::exp(x);
}

namespace {

// loss(synthesize_ir(c), tgt) over the fit canvas, touching only the union
// of the response support and the target footprint.
class EnergyEvaluator {
 public:
  EnergyEvaluator(const DenseKernel& tgt, const LossKind& kind) : tgt_(tgt), kind_(kind) {}

  double operator()(const KernelComplex& c) {
    const int canvas = fit_canvas(c, tgt_);
    engine_.forward(c, canvas, false);
    const auto& syn = engine_.response();
    const int center = canvas / 2, tr = tgt_.radius();
    detail::Box u = engine_.final_box();
    u.x0 = std::min(u.x0, center - tr);
    u.x1 = std::max(u.x1, center + tr);
    u.y0 = std::min(u.y0, center - tr);
    u.y1 = std::max(u.y1, center + tr);
    const detail::Box& sb = engine_.final_box();

    double acc = 0.0;
    for (int y = u.y0; y <= u.y1; ++y) {
      for (int x = u.x0; x <= u.x1; ++x) {
        const bool in_syn = x >= sb.x0 && x <= sb.x1 && y >= sb.y0 && y <= sb.y1;
        const double a = in_syn ? syn[static_cast<std::size_t>(y) * canvas + x] : 0.0;
        acc += pixel(a - tgt_.get(x - center, y - center));
      }
    }
    const double covered = static_cast<double>(u.x1 - u.x0 + 1) * (u.y1 - u.y0 + 1);
    acc += (static_cast<double>(canvas) * canvas - covered) * pixel(0.0);
    return acc;
  }

 private:
  double pixel(double d) const {
    switch (kind_.type) {
      case LossType::charbonnier: return std::sqrt(d * d + kind_.epsilon * kind_.epsilon);
      case LossType::l1: return std::abs(d);
      case LossType::l2: return d * d;
    }
    return 0.0;
  }

  const DenseKernel& tgt_;
  LossKind kind_;
  detail::ImpulseEngine engine_;
};

}  // namespace

PstResult pst_fit(const DenseKernel& tgt, const Layout& layout, const PstConfig& cfg, const InitStrategy& init) {
  cfg.validate();
  KernelComplex start = initialize(tgt, layout, init);
  if (cfg.weight_norm == WeightNorm::sum)
    for (auto& l : start.layers) project_sum(l);

  EnergyEvaluator energy(tgt, cfg.loss);
  const double e0 = energy(start);

  PstResult res;
  const int chains = cfg.chains;
  const double t_max = cfg.t_max > 0.0 ? cfg.t_max : 1e-2 * e0;
  const double t_min = cfg.t_min > 0.0 ? cfg.t_min : 1e-6 * e0;
  for (int c = 0; c < chains; ++c)
    res.temperatures.push_back(t_max * std::pow(t_min / t_max, static_cast<double>(c) / (chains - 1)));

  const double sigma_o = cfg.offset_sigma > 0.0 ? cfg.offset_sigma : 0.05 * tgt.size();
  const double reach = std::max(1.0, tgt.size() / 2.0);

  // One stream per chain plus one for swaps, all derived from the seed, so
  // results do not depend on the order chains are stepped in.
  std::vector<std::mt19937_64> chain_rng;
  for (int c = 0; c < chains; ++c) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(c + 1)};
    chain_rng.emplace_back(seq);
  }
  std::seed_seq swap_seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 0u};
  std::mt19937_64 swap_rng(swap_seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<KernelComplex> state(static_cast<std::size_t>(chains), start);
  std::vector<double> e(static_cast<std::size_t>(chains), e0);
  res.theta = start;
  res.best_energy = e0;
  res.evaluations = 1;
  res.trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  res.trace.push_back({0, e0, e});

  for (int it = 1; it <= cfg.iterations; ++it) {
    for (int c = 0; c < chains; ++c) {
      auto& rng = chain_rng[c];
      std::normal_distribution<double> d_off(0.0, sigma_o), d_w(0.0, cfg.weight_sigma);
      KernelComplex prop = state[c];
      bool valid = true;
      for (auto& layer : prop.layers) {
        for (auto& s : layer.samples) {
          s.offset.x = std::clamp(s.offset.x + d_off(rng), -reach, reach);
          s.offset.y = std::clamp(s.offset.y + d_off(rng), -reach, reach);
          s.weight += d_w(rng);
        }
        if (cfg.weight_norm == WeightNorm::sum) {
          if (std::abs(layer.weight_sum()) < 1e-8)
            valid = false;
          else
            project_sum(layer);
        }
      }
      const double u = unit(rng);
      if (!valid) continue;
      const double ep = energy(prop);
      ++res.evaluations;
      const double de = ep - e[c];
      if (de <= 0.0 || u < std::exp(-de / res.temperatures[c])) {
        state[c] = std::move(prop);
        e[c] = ep;
        if (ep < res.best_energy) {
          res.best_energy = ep;
          res.theta = state[c];
        }
      }
    }
    if (it % cfg.swap_interval == 0) {
      for (int c = 0; c + 1 < chains; ++c) {
        const double p = swap_probability(res.temperatures[c], e[c], res.temperatures[c + 1], e[c + 1]);
        if (unit(swap_rng) < p) {
          std::swap(state[c], state[c + 1]);
          std::swap(e[c], e[c + 1]);
          ++res.accepted_swaps;
        }
      }
    }
    res.trace.push_back({it, res.best_energy, e});
  }
  return res;
}

}  // namespace sparsekern
