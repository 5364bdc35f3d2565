#include "rfsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rfsim {

Eigen::MatrixXd ConfusionMatrix::fractions() const {
    const Eigen::Index n = counts.rows();
    const Eigen::Index cols = has_rejection ? n + 1 : n;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double row_total = counts.row(i).sum() + (has_rejection ? reject_counts[i] : 0.0);
        if (row_total <= 0.0) continue;
        out.row(i).head(n) = counts.row(i) / row_total;
        if (has_rejection) out(i, n) = reject_counts[i] / row_total;
    }
    return out;
}

std::vector<bool> ConfusionMatrix::row_valid() const {
    std::vector<bool> valid(counts.rows());
    for (Eigen::Index i = 0; i < counts.rows(); ++i)
        valid[i] = counts.row(i).sum() + reject_counts[i] > 0.0;
    return valid;
}

double ConfusionMatrix::accuracy() const {
    const double total = counts.sum() + reject_counts.sum();
    return total > 0.0 ? counts.trace() / total : 0.0;
}

ConfusionMatrix confusion(const std::vector<LabeledPrediction>& preds, int n_classes) {
    if (n_classes < 1) throw InvalidInput("confusion: n_classes must be >= 1");
    ConfusionMatrix cm;
    cm.counts = Eigen::MatrixXd::Zero(n_classes, n_classes);
    cm.reject_counts = Eigen::VectorXd::Zero(n_classes);
    for (const auto& [actual, predicted] : preds) {
        if (actual < 1 || actual > n_classes)
            throw InvalidInput("confusion: actual label " + std::to_string(actual) + " out of range");
        if (!predicted) {
            cm.reject_counts[actual - 1] += 1.0;
            cm.has_rejection = true;
            continue;
        }
        if (*predicted < 1 || *predicted > n_classes)
            throw InvalidInput("confusion: predicted label " + std::to_string(*predicted) +
                               " out of range");
        cm.counts(actual - 1, *predicted - 1) += 1.0;
    }
    return cm;
}

std::vector<std::tuple<int, int, double>> consistent_misclassification(const ConfusionMatrix& cm,
                                                                       double floor) {
    const Eigen::MatrixXd frac = cm.fractions();
    std::vector<std::tuple<int, int, double>> hits;
    for (Eigen::Index i = 0; i < cm.counts.rows(); ++i) {
        for (Eigen::Index j = 0; j < cm.counts.cols(); ++j) {
            if (i == j) continue;
            const double rate = frac(i, j);
            if (rate >= floor && rate > 0.0) hits.emplace_back(int(i) + 1, int(j) + 1, rate);
        }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (std::get<2>(a) != std::get<2>(b)) return std::get<2>(a) > std::get<2>(b);
        return a < b;
    });
    return hits;
}

double pearson(const RVec& a, const RVec& b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidInput("pearson: need two equally sized vectors");
    const RVec ac = a.array() - a.mean();
    const RVec bc = b.array() - b.mean();
    const double denom = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    if (denom == 0.0) throw InvalidInput("pearson: zero-variance input");
    return ac.dot(bc) / denom;
}

CorrelationMatrix csi_correlation(const std::map<std::string, std::vector<ChannelRealization>>& set_a,
                                  const std::map<std::string, std::vector<ChannelRealization>>& set_b,
                                  int n_points) {
    if (set_a.size() != set_b.size()) throw InvalidInput("csi_correlation: pair label mismatch");
    CorrelationMatrix out;
    for (const auto& [label, chans] : set_a) {
        const auto it = set_b.find(label);
        if (it == set_b.end()) throw InvalidInput("csi_correlation: pair label mismatch: " + label);
        if (chans.empty() || it->second.size() != chans.size())
            throw InvalidInput("csi_correlation: realization count mismatch for pair " + label);
        out.labels.push_back(label);
    }

    const auto magnitudes = [n_points](const std::vector<ChannelRealization>& chans) {
        std::vector<RVec> mags;
        mags.reserve(chans.size());
        for (const auto& ch : chans) mags.push_back(freq_response(ch, n_points).cwiseAbs());
        return mags;
    };
    std::vector<std::vector<RVec>> mags_a, mags_b;
    for (const auto& label : out.labels) {
        mags_a.push_back(magnitudes(set_a.at(label)));
        mags_b.push_back(magnitudes(set_b.at(label)));
    }

    const Eigen::Index n = static_cast<Eigen::Index>(out.labels.size());
    out.values.resize(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
        for (Eigen::Index q = 0; q < n; ++q) {
            double sum = 0.0;
            const std::size_t reps = mags_a[p].size();
            for (std::size_t r = 0; r < reps; ++r) sum += pearson(mags_a[p][r], mags_b[q][r]);
            out.values(p, q) = sum / static_cast<double>(reps);
        }
    }
    return out;
}

namespace {

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v, const char* spec = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace

void render_heatmap(const Eigen::MatrixXd& matrix, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::string& title,
                    const std::string& path) {
    if (matrix.hasNaN()) throw InvalidInput("render_heatmap: matrix contains NaN");
    if (static_cast<Eigen::Index>(row_labels.size()) != matrix.rows() ||
        static_cast<Eigen::Index>(col_labels.size()) != matrix.cols())
        throw InvalidInput("render_heatmap: label counts must match matrix dimensions");

    const int cell = 64, margin_left = 96, margin_top = 72, margin_bottom = 24, margin_right = 24;
    const Eigen::Index rows = matrix.rows(), cols = matrix.cols();
    const int width = margin_left + cell * static_cast<int>(cols) + margin_right;
    const int height = margin_top + cell * static_cast<int>(rows) + margin_bottom;

    const double vmin = matrix.minCoeff();
    const double vmax = matrix.maxCoeff();
    const double span = (vmax > vmin) ? vmax - vmin : 1.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    if (!title.empty())
        svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"16\">" << svg_escape(title) << "</text>\n";

    for (Eigen::Index j = 0; j < cols; ++j)
        svg << "<text x=\"" << margin_left + cell * j + cell / 2 << "\" y=\"" << margin_top - 10
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << svg_escape(col_labels[j]) << "</text>\n";
    for (Eigen::Index i = 0; i < rows; ++i)
        svg << "<text x=\"" << margin_left - 10 << "\" y=\"" << margin_top + cell * i + cell / 2 + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << svg_escape(row_labels[i]) << "</text>\n";

    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double t = (matrix(i, j) - vmin) / span;
            // white (t=0) to dark blue (t=1)
            const int r = static_cast<int>(std::lround(247.0 + t * (8.0 - 247.0)));
            const int g = static_cast<int>(std::lround(251.0 + t * (48.0 - 251.0)));
            const int b = static_cast<int>(std::lround(255.0 + t * (107.0 - 255.0)));
            const int x = margin_left + cell * static_cast<int>(j);
            const int y = margin_top + cell * static_cast<int>(i);
            svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"rgb(" << r << "," << g << "," << b
                << ")\" stroke=\"#999\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
                << (t > 0.6 ? "white" : "black") << "\">" << fmt(matrix(i, j)) << "</text>\n";
        }
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << svg.str();
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_matrix_csv(const Eigen::MatrixXd& matrix, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& path) {
    if (static_cast<Eigen::Index>(row_labels.size()) != matrix.rows() ||
        static_cast<Eigen::Index>(col_labels.size()) != matrix.cols())
        throw InvalidInput("write_matrix_csv: label counts must match matrix dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "";
    for (const auto& c : col_labels) out << "," << c;
    out << "\n";
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        out << row_labels[i];
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) out << "," << fmt(matrix(i, j), "%.6f");
        out << "\n";
    }
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace rfsim
