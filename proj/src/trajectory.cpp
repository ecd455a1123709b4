#include "densynth/trajectory.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace densynth {

std::pair<int, int> TrajectoryDataset::segment_range(int s) const {
  if (s < 0 || s >= segments()) throw std::out_of_range("segment_range: bad segment");
  const int first = segment_starts[s];
  const int last = s + 1 < segments() ? segment_starts[s + 1] : samples();
  return {first, last};
}

void TrajectoryDataset::save(const std::string& csv_path) const {
  std::FILE* f = std::fopen(csv_path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + csv_path);
  std::fprintf(f, "t");
  for (int i = 0; i < n; ++i) std::fprintf(f, ",x%d", i + 1);
  for (int i = 0; i < n; ++i) std::fprintf(f, ",dx%d", i + 1);
  std::fprintf(f, "\n");
  for (int s = 0; s < segments(); ++s) {
    auto [first, last] = segment_range(s);
    for (int k = first; k < last; ++k) {
      std::fprintf(f, "%.17g", (k - first) * dt);
      for (int i = 0; i < n; ++i) std::fprintf(f, ",%.17g", x(i, k));
      for (int i = 0; i < n; ++i) std::fprintf(f, ",%.17g", xdot(i, k));
      std::fprintf(f, "\n");
    }
  }
  std::fclose(f);

  nlohmann::json meta = {
      {"input_label", input_label}, {"dt", dt},     {"n", n},
      {"m", m},                     {"segments", segment_starts},
      {"seed", seed},
  };
  std::ofstream js(csv_path + ".json");
  if (!js) throw std::runtime_error("cannot write " + csv_path + ".json");
  js << meta.dump(2) << "\n";
}

TrajectoryDataset TrajectoryDataset::load(const std::string& csv_path) {
  std::ifstream js(csv_path + ".json");
  if (!js) throw std::runtime_error("missing sidecar " + csv_path + ".json");
  nlohmann::json meta = nlohmann::json::parse(js);

  TrajectoryDataset ds;
  ds.n = meta.at("n").get<int>();
  ds.m = meta.at("m").get<int>();
  ds.dt = meta.at("dt").get<double>();
  ds.input_label = meta.at("input_label").get<std::string>();
  ds.seed = meta.at("seed").get<std::uint64_t>();
  ds.segment_starts = meta.at("segments").get<std::vector<int>>();

  std::ifstream f(csv_path);
  if (!f) throw std::runtime_error("cannot read " + csv_path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty csv " + csv_path);
  {
    std::ostringstream expect;
    expect << "t";
    for (int i = 0; i < ds.n; ++i) expect << ",x" << i + 1;
    for (int i = 0; i < ds.n; ++i) expect << ",dx" << i + 1;
    if (line != expect.str())
      throw std::runtime_error("unexpected csv header in " + csv_path);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != 1 + 2 * ds.n)
      throw std::runtime_error("malformed csv row in " + csv_path);
    rows.push_back(std::move(row));
  }
  const int t = static_cast<int>(rows.size());
  ds.x.resize(ds.n, t);
  ds.xdot.resize(ds.n, t);
  for (int k = 0; k < t; ++k)
    for (int i = 0; i < ds.n; ++i) {
      ds.x(i, k) = rows[k][1 + i];
      ds.xdot(i, k) = rows[k][1 + ds.n + i];
    }
  return ds;
}

TrajectoryDataset restrict_to_box(const TrajectoryDataset& ds,
                                  const VectorXd& lo, const VectorXd& hi) {
  if (lo.size() != ds.n || hi.size() != ds.n)
    throw std::invalid_argument("restrict_to_box: box dimension mismatch");
  auto inside = [&](int k) {
    for (int i = 0; i < ds.n; ++i)
      if (ds.x(i, k) < lo[i] || ds.x(i, k) > hi[i]) return false;
    return true;
  };
  TrajectoryDataset out;
  out.n = ds.n;
  out.m = ds.m;
  out.dt = ds.dt;
  out.input_label = ds.input_label;
  out.seed = ds.seed;
  std::vector<int> keep;
  std::vector<int> starts;
  for (int s = 0; s < ds.segments(); ++s) {
    auto [first, last] = ds.segment_range(s);
    bool in_run = false;
    for (int k = first; k < last; ++k) {
      if (inside(k)) {
        if (!in_run) starts.push_back(static_cast<int>(keep.size()));
        in_run = true;
        keep.push_back(k);
      } else {
        in_run = false;
      }
    }
  }
  out.x.resize(ds.n, keep.size());
  out.xdot.resize(ds.n, keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.x.col(j) = ds.x.col(keep[j]);
    out.xdot.col(j) = ds.xdot.col(keep[j]);
  }
  out.segment_starts = std::move(starts);
  return out;
}

}  // namespace densynth
