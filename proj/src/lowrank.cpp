#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "sparsekern/baselines.hpp"
#include "sparsekern/parallel.hpp"

namespace sparsekern {

DenseKernel LowRankFilter::reconstruct() const {
  DenseKernel k(size);
  const int r = k.radius();
  for (std::size_t t = 0; t < u.size(); ++t)
    for (int j = -r; j <= r; ++j)
      for (int i = -r; i <= r; ++i) k.at(i, j) += u[t][j + r] * v[t][i + r];
  return k;
}

double LowRankFilter::tail_energy() const {
  double acc = 0.0;
  for (std::size_t k = u.size(); k < singular_values.size(); ++k) acc += singular_values[k] * singular_values[k];
  return std::sqrt(acc);
}

LowRankFilter lowrank_decompose(const DenseKernel& tgt, int rank) {
  const int m = tgt.size();
  if (rank < 1 || rank > m) throw Error(Errc::parameter, "rank must be in [1, " + std::to_string(m) + "]");
  // Row index = y, column index = x.
  Eigen::MatrixXd K(m, m);
  const int r = tgt.radius();
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) K(j + r, i + r) = tgt.at(i, j);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw Error(Errc::numeric, "SVD did not converge");

  LowRankFilter f;
  f.size = m;
  const auto& s = svd.singularValues();
  f.singular_values.assign(s.data(), s.data() + s.size());
  for (int k = 0; k < rank; ++k) {
    const double root = std::sqrt(s(k));
    std::vector<double> col(m), row(m);
    for (int n = 0; n < m; ++n) {
      col[n] = root * svd.matrixU()(n, k);
      row[n] = root * svd.matrixV()(n, k);
    }
    f.u.push_back(std::move(col));
    f.v.push_back(std::move(row));
  }
  return f;
}

Image lowrank_filter(const Image& img, const LowRankFilter& f) {
  const int w = img.width(), h = img.height();
  const int r = f.size / 2;
  Image out(w, h);
  Image tmp(w, h);
  for (int k = 0; k < f.rank(); ++k) {
    const auto& col = f.u[k];
    const auto& row = f.v[k];
    // Vertical pass: tmp[x, y] = sum_j img[x, y+j] * u[j].
    parallel_rows(h, [&](int y0, int y1) {
      for (int y = y0; y < y1; ++y) {
        auto t = tmp.row(y);
        std::fill(t.begin(), t.end(), 0.0);
        for (int j = -r; j <= r; ++j) {
          const int yy = y + j;
          if (yy < 0 || yy >= h) continue;
          const double c = col[j + r];
          const auto src = img.row(yy);
          for (int x = 0; x < w; ++x) t[x] += c * src[x];
        }
      }
    });
    // Horizontal pass: out[x, y] += sum_i tmp[x+i, y] * v[i].
    parallel_rows(h, [&](int y0, int y1) {
      for (int y = y0; y < y1; ++y) {
        const auto t = tmp.row(y);
        auto o = out.row(y);
        for (int x = 0; x < w; ++x) {
          const int lo = std::max(-r, -x), hi = std::min(r, w - 1 - x);
          double acc = 0.0;
          for (int i = lo; i <= hi; ++i) acc += t[x + i] * row[i + r];
          o[x] += acc;
        }
      }
    });
  }
  return out;
}

namespace {

// Bins a centered factor of odd length into `taps` samples along one axis.
SparseLayer bin_factor(const std::vector<double>& f, int taps, bool along_x, double sign) {
  const int m = static_cast<int>(f.size()), r = m / 2;
  const double width = static_cast<double>(m) / taps;
  SparseLayer layer;
  for (int t = 0; t < taps; ++t) {
    const double lo = -r - 0.5 + t * width, hi = lo + width;
    double mass = 0.0, moment = 0.0;
    bool pos = false, neg = false;
    for (int n = 0; n < m; ++n) {
      const double c = n - r;
      const double cover = std::max(0.0, std::min(hi, c + 0.5) - std::max(lo, c - 0.5));
      if (cover <= 0.0) continue;
      const double a = sign * f[n] * cover;
      mass += a;
      moment += a * c;
      pos = pos || a > 0.0;
      neg = neg || a < 0.0;
    }
    const double at = (pos != neg && mass != 0.0) ? moment / mass : 0.5 * (lo + hi);
    layer.samples.push_back({along_x ? Vec2{at, 0.0} : Vec2{0.0, at}, mass});
  }
  return layer;
}

}  // namespace

std::vector<KernelComplex> lowrank_sparse_terms(const LowRankFilter& f, int taps) {
  if (taps < 1) throw Error(Errc::parameter, "taps per pass must be >= 1");
  std::vector<KernelComplex> terms;
  for (int k = 0; k < f.rank(); ++k) {
    double vsum = 0.0;
    for (double x : f.v[k]) vsum += x;
    const double sign = vsum < 0.0 ? -1.0 : 1.0;
    KernelComplex c;
    c.layers.push_back(bin_factor(f.u[k], taps, false, sign));
    c.layers.push_back(bin_factor(f.v[k], taps, true, sign));
    terms.push_back(std::move(c));
  }
  return terms;
}

}  // namespace sparsekern
