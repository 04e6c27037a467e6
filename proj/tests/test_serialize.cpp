#include <doctest.h>

#include <filesystem>
#include <unistd.h>

#include "helpers.hpp"
#include "sparsekern/serialize.hpp"

using namespace sparsekern;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sparsekern_serialize_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("theta JSON round trip is bit-exact") {
  auto c = testing::random_complex(3, 5, 7.0, 1);
  c.layers[1].samples[2].weight = 1.0 / 3.0;
  c.layers[2].samples[0].offset.x = -0.0;
  c.layers[0].samples[0].weight = 1e-300;
  const auto back = theta_from_json(theta_to_json(c));
  CHECK(back == c);
  const auto path = scratch("theta.json");
  save_theta(path, c);
  CHECK(load_theta(path) == c);
  CHECK(theta_to_json(load_theta(path)) == theta_to_json(c));
}

TEST_CASE("theta JSON shape") {
  KernelComplex c{{SparseLayer{{{{0.5, -1.0}, 0.25}}}}};
  const auto text = theta_to_json(c);
  CHECK(text.find("\"layers\"") != std::string::npos);
  CHECK(text.find("\"ox\":0.5") != std::string::npos);
  CHECK(text.find("\"oy\":-1") != std::string::npos);
  CHECK(text.find("\"w\":0.25") != std::string::npos);
}

TEST_CASE("malformed theta documents are rejected") {
  for (const char* bad : {"", "{", "[]", "{\"layers\":3}", "{\"layers\":[]}", "{\"layers\":[{\"samples\":[]}]}",
                          "{\"layers\":[{\"samples\":[{\"ox\":1,\"oy\":2}]}]}",
                          "{\"layers\":[{\"samples\":[{\"ox\":\"a\",\"oy\":2,\"w\":1}]}]}"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(theta_from_json(bad), Error);
  }
  try {
    load_theta("/nonexistent/theta.json");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
  }
}

TEST_CASE("basis JSON round trip") {
  FilterBasis b;
  b.params = {5.0, 7.5, 11.0};
  for (int k = 0; k < 3; ++k) b.filters.push_back(testing::random_complex(2, 3, 4.0, 10 + k));
  const auto text = basis_to_json(b);
  CHECK(!basis_json_is_2d(text));
  const auto back = basis_from_json(text);
  CHECK(back.params == b.params);
  CHECK(back.filters == b.filters);
  const auto path = scratch("basis.json");
  save_basis(path, b);
  CHECK(load_basis(path).filters == b.filters);

  FilterBasis2D b2;
  b2.params_p = {1.0, 2.0};
  b2.params_q = {0.0, 0.5, 1.0};
  for (int k = 0; k < 6; ++k) b2.filters.push_back(testing::random_complex(2, 4, 4.0, 20 + k));
  const auto t2 = basis_to_json(b2);
  CHECK(basis_json_is_2d(t2));
  const auto back2 = basis_2d_from_json(t2);
  CHECK(back2.params_p == b2.params_p);
  CHECK(back2.params_q == b2.params_q);
  CHECK(back2.filters == b2.filters);
  CHECK_THROWS_AS(basis_from_json(t2), Error);

  // layouts must agree
  FilterBasis mixed = b;
  mixed.filters[1] = testing::random_complex(3, 3, 4.0, 99);
  CHECK_THROWS_AS(basis_from_json(basis_to_json(mixed)), Error);
}

TEST_CASE("trace CSVs round trip") {
  std::vector<TraceRow> t{{0, 1.5, 1e-3}, {1, 1.0 / 3.0, 9.99e-4}};
  const auto path = scratch("trace.csv");
  save_trace_csv(path, t);
  CHECK(read_text_file(path).rfind("step,loss,lr\n", 0) == 0);
  const auto back = load_trace_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].step == 1);
  CHECK(back[1].loss == t[1].loss);
  CHECK(back[1].lr == t[1].lr);

  std::vector<PstTraceRow> p{{0, 2.0, {2.0, 2.0, 2.0}}, {1, 1.25, {1.5, 1.25, 2.0}}};
  const auto ppath = scratch("pst.csv");
  save_pst_trace_csv(ppath, p);
  CHECK(read_text_file(ppath).rfind("iter,best_energy,chain_0,chain_1,chain_2\n", 0) == 0);
  const auto pb = load_pst_trace_csv(ppath);
  REQUIRE(pb.size() == 2);
  CHECK(pb[1].best_energy == 1.25);
  CHECK(pb[1].chain_energies == p[1].chain_energies);
}

TEST_CASE("bench CSV") {
  std::vector<BenchRow> rows{{"dense", 1, 4489, 120.5, 99.0}, {"sparse", 12, 48, 4.25, 41.5}};
  const auto quiet = bench_csv(rows, false);
  CHECK(quiet.rfind("method,layers,samples,latency_ms,psnr_db\n", 0) == 0);
  const auto noisy = bench_csv(rows, true);
  CHECK(noisy.rfind("# noisy", 0) == 0);
  const auto back = parse_bench_csv(noisy);
  REQUIRE(back.size() == 2);
  CHECK(back[1].method == "sparse");
  CHECK(back[1].samples == 48);
  CHECK(back[0].latency_ms == doctest::Approx(120.5));
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(v)) == v);
}
