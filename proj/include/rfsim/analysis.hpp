#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rfsim/channel.hpp"
#include "rfsim/common.hpp"

namespace rfsim {

// Prediction outcome paired with the true device id; an empty optional means
// the classifier rejected the window as unknown.
using LabeledPrediction = std::pair<int, std::optional<int>>;

struct ConfusionMatrix {
    Eigen::MatrixXd counts;         // n x n, row = actual, col = predicted
    Eigen::VectorXd reject_counts;  // per actual class
    bool has_rejection = false;

    // Row-normalized fractions; a rejection column is appended when any REJECT
    // was tallied. Zero-count rows normalize to all-zero and are flagged in
    // row_valid().
    Eigen::MatrixXd fractions() const;
    std::vector<bool> row_valid() const;
    double accuracy() const;
};

ConfusionMatrix confusion(const std::vector<LabeledPrediction>& preds, int n_classes);

// Off-diagonal (victim, impostor-target) pairs whose row-normalized rate
// reaches `floor`, sorted by descending rate. Device ids are 1-based.
std::vector<std::tuple<int, int, double>> consistent_misclassification(const ConfusionMatrix& cm,
                                                                       double floor = 0.5);

struct CorrelationMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> labels;
};

// Pearson correlation coefficient of two equally sized vectors.
double pearson(const RVec& a, const RVec& b);

// Entry (p, q) is the mean over paired realizations of the Pearson correlation
// between |H_p(f)| from set_a and |H_q(f)| from set_b, both sampled at
// n_points frequencies from the ground-truth taps.
CorrelationMatrix csi_correlation(const std::map<std::string, std::vector<ChannelRealization>>& set_a,
                                  const std::map<std::string, std::vector<ChannelRealization>>& set_b,
                                  int n_points);

// Deterministic SVG heatmap with per-cell value annotations and axis labels.
// NaN entries are rejected before anything is written.
void render_heatmap(const Eigen::MatrixXd& matrix, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::string& title,
                    const std::string& path);

// One matrix per file, labels in the header row and first column.
void write_matrix_csv(const Eigen::MatrixXd& matrix, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& path);

}  // namespace rfsim
