#pragma once

// Time-series containers and their on-disk form.  A dataset holds the samples
// of every trajectory segment collected under one input channel; the CSV file
// carries `t,x1..xn,dx1..dxn` rows and a JSON sidecar records the protocol
// metadata needed to interpret them.

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace densynth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct TrajectoryDataset {
  int n = 0;                       // state dimension
  int m = 0;                       // input dimension of the source system
  double dt = 0.0;
  std::string input_label;         // "zero", "step1", ..., or free-form
  std::uint64_t seed = 0;
  MatrixXd x;                      // n x T, segments concatenated
  MatrixXd xdot;                   // n x T
  std::vector<int> segment_starts; // first column of each segment

  int samples() const { return static_cast<int>(x.cols()); }
  int segments() const { return static_cast<int>(segment_starts.size()); }
  // [first, last) column range of segment s.
  std::pair<int, int> segment_range(int s) const;

  // Writes `csv_path` and the sidecar `csv_path + ".json"`.
  void save(const std::string& csv_path) const;
  static TrajectoryDataset load(const std::string& csv_path);
};

// Keeps only samples inside the box (segments are split as needed so finite
// differencing boundaries stay valid).
TrajectoryDataset restrict_to_box(const TrajectoryDataset& ds,
                                  const VectorXd& lo, const VectorXd& hi);

}  // namespace densynth
