#pragma once

#include <string>
#include <vector>

#include "cnet/choicenet.hpp"

namespace cnet::analysis {

struct ActivityRow {
    int block = 0;
    int module = 0;
    int kernel = 0;
    int conv_index = 0;
    std::string path;
    bool active = false;
};

struct ActivityReport {
    std::vector<ActivityRow> rows;
    bool degenerate = false;  // all weights equal; everything inactive
    double weight_min = 0.0, weight_max = 0.0;
    double threshold = 0.4;
};

enum class NormalizationScope { per_block, per_network };

// |weights| of the chosen scope normalized jointly to [0,1]; a conv is
// active when any of its normalized weights exceeds the threshold.
ActivityReport branch_activity(const arch::ChoiceNet& net, int block_index, double threshold = 0.4,
                               NormalizationScope scope = NormalizationScope::per_block);

std::string activity_csv(const ActivityReport& report);  // block,module,kernel,conv_index,path,active
void write_activity_csv(const std::string& path, const ActivityReport& report);
std::string render_activity_grid(const ActivityReport& report);

struct RunRow {
    std::string model;
    int64_t params = 0;
    double error = 0.0;
};

// Rows sorted ascending by parameter count; columns model,params,error.
std::string params_vs_error_csv(std::vector<RunRow> runs);
void write_params_vs_error_csv(const std::string& path, std::vector<RunRow> runs);

}  // namespace cnet::analysis
