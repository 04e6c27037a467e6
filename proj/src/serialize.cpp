#include "sparsekern/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sparsekern {

namespace {

using nlohmann::json;

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(Errc::io, std::string("malformed ") + what + " JSON: " + e.what());
  }
}

double number(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw Error(Errc::io, std::string("missing numeric field \"") + key + "\"");
  return it->get<double>();
}

const json& array_field(const json& j, const char* key) {
  if (!j.is_object()) throw Error(Errc::io, "expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw Error(Errc::io, std::string("missing array field \"") + key + "\"");
  return *it;
}

KernelComplex theta_from(const json& doc) {
  KernelComplex c;
  for (const auto& jl : array_field(doc, "layers")) {
    SparseLayer layer;
    for (const auto& js : array_field(jl, "samples"))
      layer.samples.push_back({{number(js, "ox"), number(js, "oy")}, number(js, "w")});
    c.layers.push_back(std::move(layer));
  }
  c.validate();
  return c;
}

void append_theta(std::string& out, const KernelComplex& c) {
  out += "{\"layers\":[";
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    out += l ? ",\n  {\"samples\":[" : "\n  {\"samples\":[";
    const auto& samples = c.layers[l].samples;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (i) out += ',';
      out += "{\"ox\":" + format_double(samples[i].offset.x) + ",\"oy\":" + format_double(samples[i].offset.y) +
             ",\"w\":" + format_double(samples[i].weight) + '}';
    }
    out += "]}";
  }
  out += "]}";
}

void append_numbers(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  out += ']';
}

void append_layout(std::string& out, const Layout& layout) {
  out += "{\"layers\":" + std::to_string(layout.size()) + ",\"samples\":[";
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(layout[i]);
  }
  out += "]}";
}

std::vector<double> numbers(const json& doc, const char* key) {
  std::vector<double> v;
  for (const auto& x : array_field(doc, key)) {
    if (!x.is_number()) throw Error(Errc::io, std::string("non-numeric entry in \"") + key + "\"");
    v.push_back(x.get<double>());
  }
  return v;
}

std::vector<KernelComplex> filters_from(const json& doc) {
  std::vector<KernelComplex> out;
  for (const auto& f : array_field(doc, "filters")) out.push_back(theta_from(f));
  if (doc.contains("layout")) {
    Layout declared;
    for (const auto& n : array_field(doc["layout"], "samples")) declared.push_back(n.get<int>());
    for (const auto& f : out)
      if (f.layout() != declared) throw Error(Errc::io, "basis filter layout disagrees with the declared layout");
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::io, "bad number in CSV: \"" + s + "\"");
  }
}

std::vector<std::vector<std::string>> csv_body(const std::string& path, std::size_t min_cols) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    auto cells = split_csv(line);
    if (cells.size() < min_cols) throw Error(Errc::io, path + ": short CSV row");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  // "-0" would read back as the integer 0
  if (v == 0.0 && std::signbit(v)) return "-0.0";
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::io, "write failed: " + path);
}

std::string theta_to_json(const KernelComplex& c) {
  c.validate();
  std::string out;
  append_theta(out, c);
  out += '\n';
  return out;
}

KernelComplex theta_from_json(std::string_view text) { return theta_from(parse_json(text, "theta")); }

void save_theta(const std::string& path, const KernelComplex& c) { write_text_file(path, theta_to_json(c)); }
KernelComplex load_theta(const std::string& path) { return theta_from_json(read_text_file(path)); }

std::string basis_to_json(const FilterBasis& b) {
  b.validate();
  std::string out = "{\"params\":";
  append_numbers(out, b.params);
  out += ",\"layout\":";
  append_layout(out, b.layout());
  out += ",\"filters\":[";
  for (std::size_t k = 0; k < b.filters.size(); ++k) {
    out += k ? ",\n" : "\n";
    append_theta(out, b.filters[k]);
  }
  out += "]}\n";
  return out;
}

std::string basis_to_json(const FilterBasis2D& b) {
  b.validate();
  std::string out = "{\"params\":";
  append_numbers(out, b.params_p);
  out += ",\"params_q\":";
  append_numbers(out, b.params_q);
  out += ",\"layout\":";
  append_layout(out, b.layout());
  out += ",\"filters\":[";
  for (std::size_t k = 0; k < b.filters.size(); ++k) {
    out += k ? ",\n" : "\n";
    append_theta(out, b.filters[k]);
  }
  out += "]}\n";
  return out;
}

bool basis_json_is_2d(std::string_view text) {
  const json doc = parse_json(text, "basis");
  return doc.is_object() && doc.contains("params_q");
}

FilterBasis basis_from_json(std::string_view text) {
  const json doc = parse_json(text, "basis");
  if (doc.is_object() && doc.contains("params_q")) throw Error(Errc::io, "basis has two parameters; load it as a 2D basis");
  FilterBasis b;
  b.params = numbers(doc, "params");
  b.filters = filters_from(doc);
  b.validate();
  return b;
}

FilterBasis2D basis_2d_from_json(std::string_view text) {
  const json doc = parse_json(text, "basis");
  FilterBasis2D b;
  b.params_p = numbers(doc, "params");
  b.params_q = numbers(doc, "params_q");
  b.filters = filters_from(doc);
  b.validate();
  return b;
}

void save_basis(const std::string& path, const FilterBasis& b) { write_text_file(path, basis_to_json(b)); }
void save_basis(const std::string& path, const FilterBasis2D& b) { write_text_file(path, basis_to_json(b)); }
FilterBasis load_basis(const std::string& path) { return basis_from_json(read_text_file(path)); }
FilterBasis2D load_basis_2d(const std::string& path) { return basis_2d_from_json(read_text_file(path)); }

void save_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::string out = "step,loss,lr\n";
  for (const auto& r : trace) out += std::to_string(r.step) + ',' + format_double(r.loss) + ',' + format_double(r.lr) + '\n';
  write_text_file(path, out);
}

std::vector<TraceRow> load_trace_csv(const std::string& path) {
  std::vector<TraceRow> out;
  for (const auto& c : csv_body(path, 3)) out.push_back({static_cast<int>(to_double(c[0])), to_double(c[1]), to_double(c[2])});
  return out;
}

void save_pst_trace_csv(const std::string& path, const std::vector<PstTraceRow>& trace) {
  std::string out = "iter,best_energy";
  const std::size_t chains = trace.empty() ? 0 : trace.front().chain_energies.size();
  for (std::size_t c = 0; c < chains; ++c) out += ",chain_" + std::to_string(c);
  out += '\n';
  for (const auto& r : trace) {
    out += std::to_string(r.iteration) + ',' + format_double(r.best_energy);
    for (double e : r.chain_energies) out += ',' + format_double(e);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<PstTraceRow> load_pst_trace_csv(const std::string& path) {
  std::vector<PstTraceRow> out;
  for (const auto& c : csv_body(path, 2)) {
    PstTraceRow r;
    r.iteration = static_cast<int>(to_double(c[0]));
    r.best_energy = to_double(c[1]);
    for (std::size_t k = 2; k < c.size(); ++k) r.chain_energies.push_back(to_double(c[k]));
    out.push_back(std::move(r));
  }
  return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows, bool noisy) {
  std::string out;
  if (noisy) out += "# noisy: single repetition\n";
  out += "method,layers,samples,latency_ms,psnr_db\n";
  char buf[64];
  for (const auto& r : rows) {
    out += r.method + ',' + std::to_string(r.layers) + ',' + std::to_string(r.samples) + ',';
    std::snprintf(buf, sizeof buf, "%.4f", r.latency_ms);
    out += buf;
    out += ',';
    std::snprintf(buf, sizeof buf, "%.4f", r.psnr_db);
    out += buf;
    out += '\n';
  }
  return out;
}

std::vector<BenchRow> parse_bench_csv(std::string_view text) {
  std::vector<BenchRow> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto c = split_csv(line);
    if (c.size() != 5) throw Error(Errc::io, "bench CSV rows need 5 columns");
    out.push_back({c[0], static_cast<int>(to_double(c[1])), static_cast<int>(to_double(c[2])), to_double(c[3]), to_double(c[4])});
  }
  return out;
}

}  // namespace sparsekern
