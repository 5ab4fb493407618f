#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

#ifndef IVP_CLI_PATH
#error "IVP_CLI_PATH must point at the ivp binary"
#endif

fs::path work_dir() {
  auto d = fs::temp_directory_path() / "ivp_cli_test";
  fs::create_directories(d);
  return d;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  static int counter = 0;
  const auto out_path = work_dir() / ("stdout" + std::to_string(counter) + ".txt");
  const auto err_path = work_dir() / ("stderr" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string("'") + IVP_CLI_PATH + "' " + args + " >'" +
                          out_path.string() + "' 2>'" + err_path.string() + "'";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string in_dir(const std::string& name) { return (work_dir() / name).string(); }

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream f(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::string slurp_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generate: reproducible checksum and correct header fields") {
  auto a = run("generate --out " + in_dir("a.ivsq") + " --seed 7 --frames 20 --size 16x16");
  auto b = run("generate --out " + in_dir("b.ivsq") + " --seed 7 --frames 20 --size 16x16");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("frames=20") != std::string::npos);
  CHECK(a.out.find("checksum=") != std::string::npos);
  CHECK(slurp_file(in_dir("a.ivsq")) == slurp_file(in_dir("b.ivsq")));

  const std::string raw = slurp_file(in_dir("a.ivsq"));
  REQUIRE(raw.size() > 32);
  auto u32_at = [&](std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 3])) << 24);
  };
  CHECK(raw.substr(0, 4) == "IVSQ");
  CHECK(u32_at(8) == 20);   // frame_count
  CHECK(u32_at(16) == 16);  // height
  CHECK(u32_at(20) == 16);  // width

  auto c = run("generate --out " + in_dir("c.ivsq") + " --seed 8 --frames 20 --size 16x16");
  CHECK(c.out != a.out);
}

TEST_CASE("generate: a canvas too small for any shape exits 2 naming the constraint") {
  auto r = run("generate --out " + in_dir("tiny.ivsq") + " --size 2x2 --frames 4");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("does not fit") != std::string::npos);
}

TEST_CASE("train: zero steps emit an initialized checkpoint and an empty trace body") {
  REQUIRE(run("generate --out " + in_dir("train.ivsq") + " --seed 7 --frames 24").exit_code == 0);
  auto r = run("train --data " + in_dir("train.ivsq") +
               " --cell iv1 --layers 2 --steps 0 --seed 3 --channels 3 12 --hidden 3 12 --out " +
               in_dir("zero.ivck"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("gate_kernel_coeff=35") != std::string::npos);
  CHECK(fs::exists(in_dir("zero.ivck")));
  auto trace = lines_of(in_dir("zero.ivck") + ".loss.csv");
  REQUIRE(trace.size() == 1);
  CHECK(trace[0] == "step,loss");
}

TEST_CASE("train: identical invocations produce identical loss CSVs") {
  REQUIRE(run("generate --out " + in_dir("t2.ivsq") + " --seed 5 --frames 20").exit_code == 0);
  const std::string common = "train --data " + in_dir("t2.ivsq") +
                             " --cell conv --layers 2 --steps 4 --seed 11 --seq-len 8"
                             " --channels 3 12 --hidden 3 12 --out ";
  REQUIRE(run(common + in_dir("r1.ivck")).exit_code == 0);
  REQUIRE(run(common + in_dir("r2.ivck")).exit_code == 0);
  const auto l1 = slurp_file(in_dir("r1.ivck") + ".loss.csv");
  CHECK(l1 == slurp_file(in_dir("r2.ivck") + ".loss.csv"));
  CHECK(lines_of(in_dir("r1.ivck") + ".loss.csv").size() == 5);  // header + 4 steps
  CHECK(slurp_file(in_dir("r1.ivck")) == slurp_file(in_dir("r2.ivck")));
}

TEST_CASE("eval: report rows cover 9 buckets x 3 metrics x (model + baseline)") {
  REQUIRE(run("generate --out " + in_dir("e.ivsq") + " --seed 9 --frames 20").exit_code == 0);
  REQUIRE(run("train --data " + in_dir("e.ivsq") +
              " --cell conv --layers 2 --steps 2 --seed 2 --channels 3 12 --hidden 3 12 --out " +
              in_dir("e.ivck"))
              .exit_code == 0);
  auto r = run("eval --ckpt " + in_dir("e.ivck") + " --data " + in_dir("e.ivsq") +
               " --seq-len 10 --report " + in_dir("e.csv") + " --dump-frames " + in_dir("dumps"));
  REQUIRE(r.exit_code == 0);

  auto rows = lines_of(in_dir("e.csv"));
  REQUIRE(rows.size() == 1 + 9 * 3 * 2);
  CHECK(rows[0] == "model,source_id,history_len,metric,mean,ci95,n");
  int model_rows = 0, baseline_rows = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].rfind("conv,", 0) == 0) ++model_rows;
    if (rows[i].rfind("baseline,", 0) == 0) ++baseline_rows;
  }
  CHECK(model_rows == 27);
  CHECK(baseline_rows == 27);

  CHECK(fs::exists(in_dir("dumps") + "/seq0_t1_pred.ppm"));
  CHECK(fs::exists(in_dir("dumps") + "/seq0_t1_true.ppm"));
  CHECK(fs::exists(in_dir("dumps") + "/seq0_t19_pred.ppm"));
}

TEST_CASE("eval: distinguishable source ids for multiple data files") {
  REQUIRE(run("generate --out " + in_dir("m1.ivsq") + " --seed 12 --frames 10").exit_code == 0);
  REQUIRE(run("generate --out " + in_dir("m2.ivsq") + " --seed 1007 --frames 10").exit_code == 0);
  REQUIRE(run("train --data " + in_dir("m1.ivsq") +
              " --cell conv --layers 2 --steps 0 --seed 2 --channels 3 12 --hidden 3 12 --out " +
              in_dir("m.ivck"))
              .exit_code == 0);
  auto r = run("eval --ckpt " + in_dir("m.ivck") + " --data " + in_dir("m1.ivsq") + " " +
               in_dir("m2.ivsq") + " --seq-len 10 --report " + in_dir("multi.csv"));
  REQUIRE(r.exit_code == 0);
  auto rows = lines_of(in_dir("multi.csv"));
  bool saw_first = false, saw_second = false;
  for (const auto& row : rows) {
    if (row.find("m1.ivsq") != std::string::npos) saw_first = true;
    if (row.find("m2.ivsq") != std::string::npos) saw_second = true;
  }
  CHECK(saw_first);
  CHECK(saw_second);
}

TEST_CASE("compare: exact metrics header, params table, and steps-0 consistency with eval") {
  REQUIRE(run("generate --out " + in_dir("cmp.ivsq") + " --seed 4 --frames 20").exit_code == 0);
  auto r = run("compare --data " + in_dir("cmp.ivsq") +
               " --layers 2 --steps 0 --seed 6 --channels 3 12 --hidden 3 12 --out " +
               in_dir("cmpdir"));
  REQUIRE(r.exit_code == 0);

  auto rows = lines_of(in_dir("cmpdir") + "/compare.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "model,layers,mae,mse,ssim");
  CHECK(rows[1].rfind("conv,2,", 0) == 0);
  CHECK(rows[2].rfind("iv1,2,", 0) == 0);
  CHECK(rows[3].rfind("iv2,2,", 0) == 0);

  auto params = lines_of(in_dir("cmpdir") + "/params.csv");
  REQUIRE(params.size() == 4);
  CHECK(params[0] == "model,layers,param_total,gate_coeff");
  CHECK(params[1].substr(params[1].rfind(',') + 1) == "18");  // conv 2*3^2
  CHECK(params[2].substr(params[2].rfind(',') + 1) == "35");
  CHECK(params[3].substr(params[3].rfind(',') + 1) == "28");

  // steps-0 comparison equals a plain eval of the untrained model
  REQUIRE(run("train --data " + in_dir("cmp.ivsq") +
              " --cell conv --layers 2 --steps 0 --seed 6 --channels 3 12 --hidden 3 12 --out " +
              in_dir("cmp0.ivck"))
              .exit_code == 0);
  REQUIRE(run("eval --ckpt " + in_dir("cmp0.ivck") + " --data " + in_dir("cmp.ivsq") +
              " --seq-len 10 --report " + in_dir("cmp0.csv"))
              .exit_code == 0);
  double bucket_mse_sum = 0.0;
  int bucket_count = 0;
  for (const auto& row : lines_of(in_dir("cmp0.csv"))) {
    if (row.rfind("conv,", 0) != 0) continue;
    std::stringstream ss(row);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields[3] == "mse") {
      bucket_mse_sum += std::stod(fields[4]);
      ++bucket_count;
    }
  }
  REQUIRE(bucket_count == 9);
  std::stringstream ss(rows[1]);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  CHECK(std::stod(fields[3]) == doctest::Approx(bucket_mse_sum / 9.0).epsilon(1e-12));
}

TEST_CASE("config file: values load, flags override, unknown keys are rejected") {
  REQUIRE(run("generate --out " + in_dir("cfg.ivsq") + " --seed 3 --frames 20").exit_code == 0);
  {
    std::ofstream cfg(in_dir("train.cfg"));
    cfg << "# training defaults\n"
        << "steps = 3\n"
        << "seed = 21\n"
        << "seq-len = 8\n"
        << "channels = 3 12\n"
        << "hidden = 3 12\n";
  }
  auto r = run("train --config " + in_dir("train.cfg") + " --data " + in_dir("cfg.ivsq") +
               " --cell conv --out " + in_dir("cfg.ivck"));
  REQUIRE(r.exit_code == 0);
  CHECK(lines_of(in_dir("cfg.ivck") + ".loss.csv").size() == 4);  // header + 3 steps

  // command line wins over the file
  auto r2 = run("train --config " + in_dir("train.cfg") + " --steps 1 --data " + in_dir("cfg.ivsq") +
                " --cell conv --out " + in_dir("cfg1.ivck"));
  REQUIRE(r2.exit_code == 0);
  CHECK(lines_of(in_dir("cfg1.ivck") + ".loss.csv").size() == 2);

  {
    std::ofstream cfg(in_dir("bad.cfg"));
    cfg << "steps = 1\nnot-an-option = 5\n";
  }
  auto r3 = run("train --config " + in_dir("bad.cfg") + " --data " + in_dir("cfg.ivsq") +
                " --cell conv --out " + in_dir("bad.ivck"));
  CHECK(r3.exit_code == 2);
}

TEST_CASE("exit codes: usage and data errors are 2") {
  CHECK(run("train --no-such-flag").exit_code == 2);
  CHECK(run("eval --ckpt missing.ivck --data missing.ivsq --report x.csv").exit_code == 2);

  const auto junk = in_dir("junk.ivsq");
  std::ofstream(junk, std::ios::binary) << "JUNKJUNKJUNKJUNKJUNKJUNKJUNKJUNKJUNK";
  auto r = run("train --data " + junk + " --cell conv --steps 1 --out " + in_dir("j.ivck"));
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("bad magic") != std::string::npos);

  CHECK(run("--help").exit_code == 0);
  CHECK(run("generate --help").exit_code == 0);
}

TEST_CASE("exit codes: diverged training is 3") {
  REQUIRE(run("generate --out " + in_dir("d.ivsq") + " --seed 1 --frames 12").exit_code == 0);
  auto r = run("train --data " + in_dir("d.ivsq") +
               " --cell conv --layers 2 --steps 60 --seq-len 8 --lr 1e160"
               " --channels 3 12 --hidden 3 12 --out " +
               in_dir("d.ivck"));
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("diverged") != std::string::npos);
}
