#include "cnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cnet::analysis {
namespace {

void scan_range(const arch::ChoiceNet& net, int block, double& lo, double& hi) {
    net.visit_block_convs(block, [&](int, int, int, const std::string&, const Tensor& w) {
        for (int64_t i = 0; i < w.size(); ++i) {
            const double v = std::abs(w[i]);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    });
}

}  // namespace

ActivityReport branch_activity(const arch::ChoiceNet& net, int block_index, double threshold,
                               NormalizationScope scope) {
    ActivityReport report;
    report.threshold = threshold;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    if (scope == NormalizationScope::per_block) {
        scan_range(net, block_index, lo, hi);
    } else {
        for (int b = 0; b < net.block_count(); ++b) scan_range(net, b, lo, hi);
    }
    report.weight_min = lo;
    report.weight_max = hi;
    report.degenerate = !(hi > lo);

    net.visit_block_convs(block_index, [&](int module, int kernel, int conv_index, const std::string& path,
                                           const Tensor& w) {
        ActivityRow row{block_index, module, kernel, conv_index, path, false};
        if (!report.degenerate) {
            for (int64_t i = 0; i < w.size(); ++i) {
                const double normalized = (std::abs(w[i]) - lo) / (hi - lo);
                if (normalized > threshold) {
                    row.active = true;
                    break;
                }
            }
        }
        report.rows.push_back(std::move(row));
    });
    return report;
}

std::string activity_csv(const ActivityReport& report) {
    std::ostringstream os;
    os << "block,module,kernel,conv_index,path,active\n";
    for (const auto& r : report.rows)
        os << r.block << "," << r.module << "," << r.kernel << "," << r.conv_index << "," << r.path << ","
           << (r.active ? 1 : 0) << "\n";
    return os.str();
}

void write_activity_csv(const std::string& path, const ActivityReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_activity_csv: cannot open " + path);
    out << activity_csv(report);
}

std::string render_activity_grid(const ActivityReport& report) {
    std::ostringstream os;
    if (report.degenerate) os << "(degenerate: all weights equal, everything inactive)\n";
    int current_module = -1;
    for (const auto& r : report.rows) {
        if (r.module != current_module) {
            if (current_module >= 0) os << "\n";
            os << "module " << r.module << ": ";
            current_module = r.module;
        }
        os << (r.active ? "#" : ".");
    }
    os << "\n";
    return os.str();
}

std::string params_vs_error_csv(std::vector<RunRow> runs) {
    if (runs.empty()) throw std::invalid_argument("params_vs_error_csv: empty run list");
    std::stable_sort(runs.begin(), runs.end(), [](const RunRow& a, const RunRow& b) { return a.params < b.params; });
    std::ostringstream os;
    os << "model,params,error\n";
    for (const auto& r : runs) os << r.model << "," << r.params << "," << r.error << "\n";
    return os.str();
}

void write_params_vs_error_csv(const std::string& path, std::vector<RunRow> runs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_params_vs_error_csv: cannot open " + path);
    out << params_vs_error_csv(std::move(runs));
}

}  // namespace cnet::analysis
