#pragma once

#include <string>
#include <vector>

#include "densecrab/run_config.hpp"

namespace densecrab {

enum class AblateAxis { framework, queue, augmentation, data };

AblateAxis ablate_axis_from_name(const std::string& name);
const char* ablate_axis_name(AblateAxis axis);

struct AblateRow {
    std::string variant;
    double ndcg10;
    double recall100;
};

/// Pretrains one model per variant along the axis, retrieves the configured
/// eval queries, and scores nDCG@10 / Recall@100. Writes one run file per
/// variant plus an axis table under out_dir.
std::vector<AblateRow> run_ablation(AblateAxis axis, const RunConfig& config,
                                    const std::string& out_dir);

std::string ablate_table_to_tsv(const std::vector<AblateRow>& rows);

}  // namespace densecrab
