#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "sparsekern/sparsekern.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(SPARSEKERN_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("sparsekern_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double theta_ir_sum(const fs::path& theta) {
  sk_complex* c = nullptr;
  REQUIRE(sk_complex_load(theta.c_str(), &c) == SK_OK);
  sk_kernel* ir = nullptr;
  REQUIRE(sk_complex_impulse_response(c, 0, &ir) == SK_OK);
  const double s = sk_kernel_sum(ir);
  sk_kernel_free(ir);
  sk_complex_free(c);
  return s;
}

void write_test_image(const fs::path& p, int size) {
  std::ofstream f(p, std::ios::binary);
  f << "P2\n" << size << ' ' << size << "\n255\n";
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) f << ((x * 7 + y * 13) % 256) << '\n';
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli("optimize --layout 0x4 --kernel gaussian:5").code == 2);
  CHECK(cli("optimize --layout 0x4").code == 2);
  CHECK(cli("optimize --kernel gaussian:5 --loss nope").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("library errors exit with 1") {
  const auto out = workdir() / "bad";
  CHECK(cli("optimize --kernel gaussian:-3 --out " + out.string()).code == 1);
  CHECK(cli("lowrank --kernel gaussian:2 --rank 99 --out " + out.string()).code == 1);
}

TEST_CASE("optimize writes its artifacts") {
  const auto out = workdir() / "opt";
  const auto r = cli("optimize --kernel gaussian:5 --layout 12x4 --init ir --steps 300 --out " + out.string());
  REQUIRE(r.code == 0);
  for (const char* f : {"theta.json", "ir.pgm", "trace.csv", "summary.csv"}) CHECK(fs::exists(out / f));
  CHECK(theta_ir_sum(out / "theta.json") == doctest::Approx(1.0).epsilon(1e-6));
  const auto rows = csv_rows(slurp(out / "summary.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"kernel", "layout", "init", "final_loss", "psnr_ir", "time_ms"});
  CHECK(rows[1][0] == "gaussian:5");
  CHECK(rows[1][2] == "ir");
  CHECK(csv_rows(slurp(out / "trace.csv")).size() == 301);
  // emitted files load back
  sk_kernel* ir = nullptr;
  CHECK(sk_kernel_load((out / "ir.pgm").c_str(), &ir) == SK_OK);
  sk_kernel_free(ir);
}

TEST_CASE("delta with one sample reaches 80 dB") {
  const auto out = workdir() / "delta";
  const auto r = cli("optimize --kernel delta --layout 1x1 --out " + out.string());
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 1);
  CHECK(std::stod(rows[0][4]) >= 80.0);
}

TEST_CASE("optimization and sampling commands are deterministic") {
  const auto a = workdir() / "det_a", b = workdir() / "det_b";
  for (const auto& d : {a, b}) {
    REQUIRE(cli("optimize --kernel ring --layout 4x4 --init ss --seed 3 --steps 80 --out " + d.string()).code == 0);
    REQUIRE(cli("pst --kernel ring --layout 4x4 --seed 3 --iters 100 --chains 3 --out " + (d / "pst").string()).code == 0);
  }
  CHECK(slurp(a / "theta.json") == slurp(b / "theta.json"));
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "pst" / "theta.json") == slurp(b / "pst" / "theta.json"));
  CHECK(slurp(a / "pst" / "pst_trace.csv") == slurp(b / "pst" / "pst_trace.csv"));
}

TEST_CASE("compare covers every cell") {
  const auto out = workdir() / "cmp";
  const auto r = cli("compare --kernel gaussian:5,ring --methods ours,pst,lowrank --iters 1000 --out " + out.string());
  CHECK(r.code == 0);
  const auto rows = csv_rows(slurp(out / "compare.csv"));
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"kernel", "method", "budget", "psnr_ir", "sse", "latency_ms", "status"});
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(rows[i - 1][0] + rows[i - 1][1] <= rows[i][0] + rows[i][1]);
  double ours = -1, pst = -1, lowrank = -1;
  for (const auto& row : rows) {
    if (row[0] != "gaussian:5") continue;
    if (row[1] == "ours") ours = std::stod(row[4]);
    if (row[1] == "pst") pst = std::stod(row[4]);
    if (row[1] == "lowrank") lowrank = std::stod(row[4]);
    CHECK(row[6] == "ok");
  }
  CHECK(ours < pst);
  CHECK(lowrank < 1e-12);
  const auto svg = slurp(out / "compare.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("compare records failing cells and exits nonzero") {
  const auto out = workdir() / "cmp_fail";
  const auto r = cli("compare --kernel gaussian:2,blob:3 --methods ours,lowrank --steps 20 --out " + out.string());
  CHECK(r.code == 1);
  const auto rows = csv_rows(slurp(out / "compare.csv"));
  REQUIRE(rows.size() == 5);
  int failed = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) failed += rows[i][6] != "ok";
  CHECK(failed == 2);
}

TEST_CASE("filter, lowrank and spatially varying commands") {
  const auto dir = workdir() / "sv";
  fs::create_directories(dir);
  const auto img = dir / "in.pgm";
  write_test_image(img, 48);
  CHECK(cli("filter --image " + img.string() + " --kernel gaussian:2 --out " + (dir / "dense").string()).code == 0);
  CHECK(fs::exists(dir / "dense" / "filtered.pgm"));
  CHECK(cli("filter --image " + img.string() + " --out " + (dir / "none").string()).code == 2);

  const auto lr = cli("lowrank --kernel ring --rank 2 --image " + img.string() + " --out " + (dir / "lr").string());
  REQUIRE(lr.code == 0);
  CHECK(fs::exists(dir / "lr" / "filtered.pgm"));
  CHECK(csv_rows(lr.out).size() == 2);

  REQUIRE(cli("sv-build --kernel gaussian --params 2,3 --layout 3x4 --steps 60 --out " + (dir / "basis").string()).code == 0);
  const auto basis = dir / "basis" / "basis.json";
  CHECK(fs::exists(basis));
  CHECK(cli("sv-build --kernel gaussian --params 3,2 --layout 3x4 --steps 5 --out " + (dir / "bad").string()).code == 1);
  CHECK(cli("sv-build --kernel gaussian --params 3,x --layout 3x4 --out " + (dir / "bad").string()).code == 2);

  const auto apply = cli("sv-apply --image " + img.string() + " --basis " + basis.string() + " --family gaussian --out " +
                         (dir / "apply").string());
  REQUIRE(apply.code == 0);
  CHECK(fs::exists(dir / "apply" / "sv.pgm"));
  CHECK(fs::exists(dir / "apply" / "gt.pgm"));
  CHECK(apply.out.find("psnr_db") != std::string::npos);
}

TEST_CASE("bench emits the timing table") {
  const auto dir = workdir() / "bench";
  const auto r = cli("bench --size 64 --kernel gaussian:3 --layout 4x4 --steps 50 --reps 1 --out " + dir.string());
  REQUIRE(r.code == 0);
  const auto text = slurp(dir / "bench.csv");
  CHECK(text.rfind("# noisy", 0) == 0);
  const auto rows = csv_rows(text);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"method", "layers", "samples", "latency_ms", "psnr_db"});
  CHECK(rows[1][0] == "dense");
  CHECK(rows[2][0] == "sparse");
  CHECK(rows[2][2] == "16");
  const auto r3 = cli("bench --size 64 --kernel gaussian:3 --layout 4x4 --steps 50 --reps 3 --out " + dir.string());
  REQUIRE(r3.code == 0);
  CHECK(slurp(dir / "bench.csv").rfind("method,", 0) == 0);
}

TEST_CASE("config files fill in options the command line leaves out") {
  const auto dir = workdir() / "cfg";
  fs::create_directories(dir);
  const auto cfg = dir / "run.cfg";
  std::ofstream(cfg) << "# defaults\nlayout = 2x2\nsteps=40\ninit=ir\n";
  const auto r = cli("optimize --kernel gaussian:2 --config " + cfg.string() + " --steps 7 --out " + dir.string());
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][1] == "2x2");
  CHECK(rows[0][2] == "ir");
  CHECK(csv_rows(slurp(dir / "trace.csv")).size() == 8);

  std::ofstream(cfg) << "bogus=1\n";
  CHECK(cli("optimize --kernel gaussian:2 --config " + cfg.string() + " --out " + dir.string()).code == 2);
  CHECK(cli("optimize --kernel gaussian:2 --config /nonexistent.cfg").code == 2);
}
