#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "peakcast/commands.hpp"
#include "peakcast/kernels.hpp"

using namespace peakcast;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "peakcast_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path file(const std::string& name) { return workdir() / name; }

Run run(const std::string& args, const std::string& env = "") {
  const auto out = file("stdout.txt"), err = file("stderr.txt");
  const std::string cmd = env + " \"" PEAKCAST_CLI "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// A small load-like series shared by the training tests.
const fs::path& series() {
  static const fs::path p = [] {
    auto path = file("series.csv");
    REQUIRE(run("synth --hours 1500 --seed 3 --out " + path.string()).code == 0);
    return path;
  }();
  return p;
}

}  // namespace

TEST_CASE("synth is deterministic and summarizes") {
  auto a = run("synth --hours 48 --seed 7 --threshold 30000 --out " + file("a.csv").string());
  auto b = run("synth --hours 48 --seed 7 --threshold 30000 --out " + file("b.csv").string());
  CHECK(a.code == 0);
  CHECK(a.out.rfind("n=48 min=", 0) == 0);
  CHECK(a.out.find("above_threshold=") != std::string::npos);
  CHECK(a.out == b.out);
  CHECK(slurp(file("a.csv")) == slurp(file("b.csv")));
  CHECK(lines(slurp(file("a.csv"))) == 49);
  run("synth --hours 48 --seed 8 --out " + file("c.csv").string());
  CHECK(slurp(file("a.csv")) != slurp(file("c.csv")));
}

TEST_CASE("errors exit nonzero with one diagnostic line") {
  auto zero = run("synth --hours 0 --out " + file("z.csv").string());
  CHECK(zero.code == 1);
  CHECK(lines(zero.err) == 1);
  CHECK(zero.err.rfind("error: ", 0) == 0);
  CHECK(zero.out.find("--hours") != std::string::npos);  // usage text
  CHECK_FALSE(fs::exists(file("z.csv")));

  auto missing = run("synth --seed 1");
  CHECK(missing.code == 1);
  CHECK(lines(missing.err) == 1);

  auto nodata = run("train --data " + file("nope.csv").string() + " --out " + file("x.json").string());
  CHECK(nodata.code == 1);
  CHECK(lines(nodata.err) == 1);
  CHECK(nodata.err.find("IoError") != std::string::npos);

  auto bad_seed = run("synth --hours 5 --out " + file("s.csv").string(), "PEAKCAST_SEED=abc");
  CHECK(bad_seed.code == 1);
  CHECK(lines(bad_seed.err) == 1);

  CHECK(run("--help").code == 0);
}

TEST_CASE("evt with a threshold above the maximum names the count") {
  auto r = run("train --data " + series().string() + " --model evt --threshold 1e9 --out " + file("e.json").string());
  CHECK(r.code == 1);
  CHECK(lines(r.err) == 1);
  CHECK(r.err.find("InsufficientExceedances") != std::string::npos);
  CHECK(r.err.find("found 0 ") != std::string::npos);
}

TEST_CASE("trained bundle reproduces the in-process model") {
  const std::string flags = "--model mlp --hidden 4 --epochs 5 --seed 11 --val-fraction 0.2";
  auto r = run("train --data " + series().string() + " " + flags + " --out " + file("m.json").string());
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("epoch,train_loss,val_loss\n0,", 0) == 0);
  CHECK(lines(r.out) == 6);

  cli::TrainOptions o;
  o.data = series();
  o.model = "mlp";
  o.hidden = 4;
  o.epochs = 5;
  o.seed = 11;
  o.val_fraction = 0.2;
  std::ostringstream log;
  const auto frame = data::read_csv(series());
  const auto res = cli::train_model(o, frame, log);
  CHECK(log.str() == r.out);
  CHECK(bundle::serialize(res.bundle) == slurp(file("m.json")));

  REQUIRE(run("forecast --bundle " + file("m.json").string() + " --data " + series().string() + " --steps 100 --out " +
              file("m.csv").string())
              .code == 0);
  CHECK(slurp(file("m.csv")) == cli::forecast_csv(cli::forecast(res.bundle, frame, 100)));
  const auto rows = read_rows(file("m.csv"));
  REQUIRE(rows.size() == 101);
  CHECK(rows[1].size() == 4);
  CHECK(rows[1][2].empty());
  CHECK(rows[1][3].empty());

  // On the training window the forecasts equal the network applied to the training set.
  const auto net = res.bundle.network();
  const auto raw = kernels::predict(net, parameters(net), res.train_set.inputs, res.train_set.lags);
  const auto pred = cli::predict_targets(res.bundle, frame, o.lags - 1 + o.horizon);
  REQUIRE(pred.size() == raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(pred[i] == res.bundle.normalizer.invert(raw[i]));
}

TEST_CASE("seed determinism and the environment override") {
  const std::string base = "train --data " + series().string() + " --model evt --hidden 3 --epochs 4 --dropout 0.1 ";
  REQUIRE(run(base + "--seed 5 --out " + file("d1.json").string()).code == 0);
  REQUIRE(run(base + "--seed 5 --out " + file("d2.json").string()).code == 0);
  REQUIRE(run(base + "--seed 1 --out " + file("d3.json").string(), "PEAKCAST_SEED=5").code == 0);
  REQUIRE(run(base + "--seed 6 --out " + file("d4.json").string()).code == 0);
  CHECK(slurp(file("d1.json")) == slurp(file("d2.json")));
  CHECK(slurp(file("d1.json")) == slurp(file("d3.json")));
  CHECK(slurp(file("d1.json")) != slurp(file("d4.json")));
  for (const char* out : {"f1.csv", "f2.csv"}) {
    REQUIRE(run("forecast --bundle " + file("d1.json").string() + " --data " + series().string() + " --steps 50 --out " +
                file(out).string())
                .code == 0);
  }
  CHECK(slurp(file("f1.csv")) == slurp(file("f2.csv")));
}

TEST_CASE("constant evt head gives a flat forecast") {
  const double u = 31000.0, c = 750.0;
  nn::EvtHead head(24, 3);  // zero weights: raw outputs are 0, so xi = 0
  head.set_excess_scale(c / (std::log(2.0) + 1e-6));
  bundle::ModelBundle b;
  b.kind = bundle::ModelKind::evt_head;
  b.lags = 24;
  b.horizon = 5;
  b.threshold = u;
  b.normalizer = {28000.0, 3000.0};
  b.set_network(head);
  bundle::save(b, file("const.json"));
  REQUIRE(run("forecast --bundle " + file("const.json").string() + " --data " + series().string() +
              " --steps 200 --out " + file("const.csv").string())
              .code == 0);
  const auto rows = read_rows(file("const.csv"));
  REQUIRE(rows.size() == 201);
  CHECK(rows[0] == std::vector<std::string>{"timestamp", "point", "lo95", "hi95"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][1] == rows[1][1]);
    CHECK(std::stod(rows[i][1]) == doctest::Approx(u + c).epsilon(1e-12));
    CHECK(std::stod(rows[i][2]) == doctest::Approx(u - c * std::log1p(-0.025)).epsilon(1e-12));
  }
}

TEST_CASE("evt intervals bracket the point forecast") {
  // The GPD mean lies between the 2.5% and 97.5% quantiles for xi up to about 0.96;
  // beyond that the heavy tail pushes the mean past the upper quantile.
  for (double xi = -0.99; xi <= 0.95; xi += 0.01) {
    const evt::GpdParams g{10.0, 2.0, xi};
    CHECK(evt::gpd_quantile(g, 0.025) <= evt::gpd_mean(g));
    CHECK(evt::gpd_mean(g) <= evt::gpd_quantile(g, 0.975));
  }
  CHECK(evt::gpd_mean({0.0, 1.0, 0.98}) > evt::gpd_quantile({0.0, 1.0, 0.98}, 0.975));

  REQUIRE(run("train --data " + series().string() + " --model evt --epochs 30 --seed 2 --out " +
              file("evt.json").string())
              .code == 0);
  REQUIRE(run("forecast --bundle " + file("evt.json").string() + " --data " + series().string() +
              " --steps 1000 --out " + file("evt.csv").string())
              .code == 0);
  const auto rows = read_rows(file("evt.csv"));
  REQUIRE(rows.size() == 1001);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double point = std::stod(rows[i][1]), lo = std::stod(rows[i][2]), hi = std::stod(rows[i][3]);
    CHECK(lo <= point);
    CHECK(point <= hi);
    CHECK(lo >= 31000.0);
  }
}

TEST_CASE("compare") {
  const std::string data = " --data " + series().string();
  REQUIRE(run("train" + data + " --model fourier --test-hours 240 --out " + file("fourier.json").string()).code == 0);
  REQUIRE(run("train" + data + " --model lstm --hidden 3 --epochs 2 --test-hours 240 --out " +
              file("lstm.json").string())
              .code == 0);

  auto self = run("compare" + data + " --bundles " + file("lstm.json").string() + " " + file("lstm.json").string() +
                  " --out " + file("self.csv").string());
  REQUIRE(self.code == 0);
  auto rows = read_rows(file("self.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "lstm_mse_1");
  CHECK(rows[2][0] == "lstm_mse_2");
  CHECK(std::vector(rows[1].begin() + 1, rows[1].end()) == std::vector(rows[2].begin() + 1, rows[2].end()));

  auto both = run("compare" + data + " --bundles " + file("fourier.json").string() + " " + file("lstm.json").string() +
                  " --out " + file("cmp.csv").string());
  REQUIRE(both.code == 0);
  rows = read_rows(file("cmp.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"model", "mse", "rmse", "mae", "mape", "peak_mse", "peak_rmse", "peak_mae",
                                            "peak_mape", "n", "n_peaks"});
  std::vector<std::string> names{rows[1][0], rows[2][0]};
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"fourier_ar", "lstm_mse"});
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(rows[i][9] == "240");
    CHECK(std::stod(rows[i][2]) == std::sqrt(std::stod(rows[i][1])));
  }
  CHECK(both.out.find("fourier_ar") != std::string::npos);

  CHECK(run("compare" + data + " --bundles " + file("lstm.json").string()).code != 0);
}
