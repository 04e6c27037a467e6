#include "sparsekern/kernels.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "sparsekern/pgm.hpp"

namespace sparsekern {

namespace {

constexpr int kSupersample = 4;
constexpr double kStarInnerRatio = 0.4;
constexpr double kRingInnerRatio = 2.0 / 3.0;

struct Point {
  double x, y;
};

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::string_view context) {
  // std::from_chars for double is available in libstdc++ 11.
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw Error(Errc::parameter, "bad number '" + std::string(s) + "' in kernel spec '" + std::string(context) + "'");
  return v;
}

int parse_int(std::string_view s, std::string_view context) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw Error(Errc::parameter, "bad integer '" + std::string(s) + "' in kernel spec '" + std::string(context) + "'");
  return v;
}

int shape_extent(double radius) {
  const int m = 2 * static_cast<int>(std::ceil(radius)) + 3;
  return m % 2 == 0 ? m + 1 : m;
}

bool point_in_polygon(const std::vector<Point>& poly, double x, double y) {
  bool inside = false;
  for (std::size_t a = 0, b = poly.size() - 1; a < poly.size(); b = a++) {
    const Point& p = poly[a];
    const Point& q = poly[b];
    if ((p.y > y) != (q.y > y)) {
      const double cross_x = p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y);
      if (x < cross_x) inside = !inside;
    }
  }
  return inside;
}

std::vector<Point> star_outline(const KernelSpec& s) {
  std::vector<Point> poly;
  const int n = s.sides;
  for (int k = 0; k < 2 * n; ++k) {
    const double r = (k % 2 == 0) ? s.radius : s.inner_radius;
    const double a = s.rotation + std::numbers::pi * k / n;
    poly.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return poly;
}

std::vector<Point> heart_outline(const KernelSpec& s) {
  // Parametric heart; the outline stays within 18 units of the origin.
  constexpr int kVertices = 256;
  const double scale = s.radius / 18.0;
  const double c = std::cos(s.rotation), sn = std::sin(s.rotation);
  std::vector<Point> poly;
  poly.reserve(kVertices);
  for (int k = 0; k < kVertices; ++k) {
    const double t = 2.0 * std::numbers::pi * k / kVertices;
    const double st = std::sin(t);
    const double hx = 16.0 * st * st * st;
    const double hy = 13.0 * std::cos(t) - 5.0 * std::cos(2 * t) - 2.0 * std::cos(3 * t) - std::cos(4 * t);
    // Image rows grow downward; flip so the lobes sit on top.
    const double x = scale * hx, y = -scale * (hy + 2.5);
    poly.push_back({c * x - sn * y, sn * x + c * y});
  }
  return poly;
}

template <class Inside>
DenseKernel rasterize(int size, Inside&& inside) {
  DenseKernel k(size);
  const int r = k.radius();
  for (int j = -r; j <= r; ++j) {
    for (int i = -r; i <= r; ++i) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double x = i + (sx + 0.5) / kSupersample - 0.5;
          const double y = j + (sy + 0.5) / kSupersample - 0.5;
          if (inside(x, y)) ++hits;
        }
      }
      k.at(i, j) = static_cast<double>(hits) / (kSupersample * kSupersample);
    }
  }
  return k;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::parameter, std::string(what) + " must be positive");
}

int resolve_size(const KernelSpec& s, double bounding_radius) {
  int m = s.size == 0 ? shape_extent(bounding_radius) : s.size;
  if (m < 1 || m % 2 == 0) throw Error(Errc::parameter, "kernel size must be a positive odd integer");
  // Keep a one-pixel empty border: the outermost pixel ring's nearest
  // supersample sits at radius - 0.5 + 0.5/kSupersample.
  const double limit = m / 2 - 0.5 + 0.5 / kSupersample;
  if (bounding_radius >= limit)
    throw Error(Errc::parameter, "kernel size too small for the requested shape");
  return m;
}

}  // namespace

KernelSpec KernelSpec::gaussian(double sigma, int size) {
  KernelSpec s;
  s.shape = Shape::gaussian;
  s.sigma = sigma;
  s.size = size;
  return s;
}

KernelSpec KernelSpec::disk(double radius, int size) {
  KernelSpec s;
  s.shape = Shape::disk;
  s.radius = radius;
  s.size = size;
  return s;
}

KernelSpec KernelSpec::ring(double inner, double outer, int size) {
  KernelSpec s;
  s.shape = Shape::ring;
  s.inner_radius = inner;
  s.radius = outer;
  s.size = size;
  return s;
}

KernelSpec KernelSpec::polygon(int sides, double radius, double rotation, int size) {
  KernelSpec s;
  s.shape = Shape::polygon;
  s.sides = sides;
  s.radius = radius;
  s.rotation = rotation;
  s.size = size;
  return s;
}

KernelSpec KernelSpec::star(int points, double outer, double inner, double rotation, int size) {
  KernelSpec s;
  s.shape = Shape::star;
  s.sides = points;
  s.radius = outer;
  s.inner_radius = inner;
  s.rotation = rotation;
  s.size = size;
  return s;
}

KernelSpec KernelSpec::heart(double radius, int size) {
  KernelSpec s;
  s.shape = Shape::heart;
  s.radius = radius;
  s.size = size;
  return s;
}

KernelSpec KernelSpec::delta() {
  KernelSpec s;
  s.shape = Shape::delta;
  s.size = 1;
  return s;
}

KernelSpec KernelSpec::file(std::string path) {
  KernelSpec s;
  s.shape = Shape::file;
  s.path = std::move(path);
  return s;
}

int gaussian_extent(double sigma) {
  require_positive(sigma, "gaussian sigma");
  int m = static_cast<int>(std::ceil(6.0 * sigma - 1e-12));
  if (m < 1) m = 1;
  return m % 2 == 0 ? m + 1 : m;
}

KernelSpec parse_kernel_spec(std::string_view text) {
  if (text.starts_with("file:")) return KernelSpec::file(std::string(text.substr(5)));

  std::string_view body = text;
  int size = 0;
  if (const auto at = text.rfind('@'); at != std::string_view::npos) {
    size = parse_int(text.substr(at + 1), text);
    body = text.substr(0, at);
  }
  const auto f = split(body, ':');
  const std::string_view name = f[0];
  auto num = [&](std::size_t idx, double fallback) {
    return idx < f.size() ? parse_double(f[idx], text) : fallback;
  };
  auto count_fields = [&](std::size_t max_fields) {
    if (f.size() > max_fields) throw Error(Errc::parameter, "too many fields in kernel spec '" + std::string(text) + "'");
  };

  KernelSpec s;
  if (name == "delta") {
    count_fields(1);
    s = KernelSpec::delta();
    if (size != 0) s.size = size;
    return s;
  }
  if (name == "gaussian") {
    count_fields(2);
    s = KernelSpec::gaussian(num(1, 5.0), size);
  } else if (name == "disk") {
    count_fields(2);
    s = KernelSpec::disk(num(1, 12.0), size);
  } else if (name == "ring") {
    count_fields(3);
    if (f.size() == 2) {
      const double outer = num(1, 12.0);
      s = KernelSpec::ring(kRingInnerRatio * outer, outer, size);
    } else {
      s = KernelSpec::ring(num(1, 8.0), num(2, 12.0), size);
    }
  } else if (name == "polygon") {
    count_fields(4);
    s = KernelSpec::polygon(f.size() > 1 ? parse_int(f[1], text) : 6, num(2, 12.0), num(3, 0.0), size);
  } else if (name == "star") {
    count_fields(5);
    const double outer = num(2, 12.0);
    s = KernelSpec::star(f.size() > 1 ? parse_int(f[1], text) : 4, outer, num(3, kStarInnerRatio * outer), num(4, 0.0), size);
  } else if (name == "heart") {
    count_fields(2);
    s = KernelSpec::heart(num(1, 12.0), size);
  } else {
    throw Error(Errc::parameter, "unknown kernel shape '" + std::string(name) + "'");
  }
  return s;
}

std::string format_kernel_spec(const KernelSpec& s) {
  std::ostringstream os;
  os.precision(17);
  switch (s.shape) {
    case Shape::delta: os << "delta"; break;
    case Shape::gaussian: os << "gaussian:" << s.sigma; break;
    case Shape::disk: os << "disk:" << s.radius; break;
    case Shape::ring: os << "ring:" << s.inner_radius << ':' << s.radius; break;
    case Shape::polygon: os << "polygon:" << s.sides << ':' << s.radius << ':' << s.rotation; break;
    case Shape::star: os << "star:" << s.sides << ':' << s.radius << ':' << s.inner_radius << ':' << s.rotation; break;
    case Shape::heart: os << "heart:" << s.radius; break;
    case Shape::file: return "file:" + s.path;
  }
  if (s.size != 0 && s.shape != Shape::delta) os << '@' << s.size;
  return os.str();
}

KernelSpec family_member(std::string_view family, double p) { return family_member(family, p, 0.0); }

KernelSpec family_member(std::string_view family, double p, double angle) {
  const auto f = split(family, ':');
  const std::string_view name = f[0];
  auto no_angle = [&] {
    if (angle != 0.0) throw Error(Errc::parameter, "family '" + std::string(family) + "' has no angle parameter");
  };
  if (name == "gaussian") {
    no_angle();
    return KernelSpec::gaussian(p);
  }
  if (name == "disk") {
    no_angle();
    return KernelSpec::disk(p);
  }
  if (name == "ring") {
    no_angle();
    return KernelSpec::ring(kRingInnerRatio * p, p);
  }
  if (name == "polygon") return KernelSpec::polygon(f.size() > 1 ? parse_int(f[1], family) : 6, p, angle);
  if (name == "star") return KernelSpec::star(f.size() > 1 ? parse_int(f[1], family) : 4, p, kStarInnerRatio * p, angle);
  if (name == "heart") {
    auto s = KernelSpec::heart(p);
    s.rotation = angle;
    return s;
  }
  throw Error(Errc::parameter, "unknown kernel family '" + std::string(family) + "'");
}

DenseKernel generate_kernel(const KernelSpec& s) {
  DenseKernel k;
  switch (s.shape) {
    case Shape::delta: {
      const int m = s.size == 0 ? 1 : s.size;
      k = DenseKernel(m);
      k.at(0, 0) = 1.0;
      return k;
    }
    case Shape::gaussian: {
      require_positive(s.sigma, "gaussian sigma");
      const int m = s.size == 0 ? gaussian_extent(s.sigma) : s.size;
      k = DenseKernel(m);
      const int r = k.radius();
      const double denom = 2.0 * s.sigma * s.sigma;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i) k.at(i, j) = std::exp(-static_cast<double>(i * i + j * j) / denom);
      break;
    }
    case Shape::disk: {
      require_positive(s.radius, "disk radius");
      const double r2 = s.radius * s.radius;
      k = rasterize(resolve_size(s, s.radius), [&](double x, double y) { return x * x + y * y <= r2; });
      break;
    }
    case Shape::ring: {
      require_positive(s.radius, "ring outer radius");
      if (!(s.inner_radius >= 0.0) || !(s.inner_radius < s.radius))
        throw Error(Errc::parameter, "ring inner radius must be in [0, outer)");
      const double lo = s.inner_radius * s.inner_radius, hi = s.radius * s.radius;
      k = rasterize(resolve_size(s, s.radius), [&](double x, double y) {
        const double d = x * x + y * y;
        return d >= lo && d <= hi;
      });
      break;
    }
    case Shape::polygon: {
      require_positive(s.radius, "polygon radius");
      if (s.sides < 3) throw Error(Errc::parameter, "polygon needs at least 3 sides");
      const double sector = 2.0 * std::numbers::pi / s.sides;
      const double apothem = s.radius * std::cos(sector / 2);
      k = rasterize(resolve_size(s, s.radius), [&](double x, double y) {
        const double rho = std::hypot(x, y);
        double a = std::fmod(std::atan2(y, x) - s.rotation, sector);
        if (a < 0) a += sector;
        return rho * std::cos(a - sector / 2) <= apothem;
      });
      break;
    }
    case Shape::star: {
      require_positive(s.radius, "star outer radius");
      require_positive(s.inner_radius, "star inner radius");
      if (s.sides < 2) throw Error(Errc::parameter, "star needs at least 2 points");
      if (s.inner_radius >= s.radius) throw Error(Errc::parameter, "star inner radius must be below the outer radius");
      const auto poly = star_outline(s);
      k = rasterize(resolve_size(s, s.radius), [&](double x, double y) { return point_in_polygon(poly, x, y); });
      break;
    }
    case Shape::heart: {
      require_positive(s.radius, "heart radius");
      const auto poly = heart_outline(s);
      k = rasterize(resolve_size(s, s.radius), [&](double x, double y) { return point_in_polygon(poly, x, y); });
      break;
    }
    case Shape::file:
      return load_kernel_image(s.path);
  }
  k.normalize();
  return k;
}

}  // namespace sparsekern
