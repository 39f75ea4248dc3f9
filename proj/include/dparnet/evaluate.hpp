#ifndef DPARNET_EVALUATE_HPP
#define DPARNET_EVALUATE_HPP

#include <functional>
#include <string>
#include <vector>

#include "dparnet/dataset.hpp"
#include "dparnet/metrics.hpp"
#include "dparnet/models.hpp"

namespace dparnet {

struct SeqMetrics {
    std::string seq_id;
    double psnr = 0.0;
    double ssim = 0.0;
    double nrmse = 0.0;
    double vi = 0.0;
};

struct MetricsReport {
    std::string task;
    std::string model_id;
    std::string timestamp;
    std::vector<SeqMetrics> per_sequence;
    SeqMetrics aggregate;  // arithmetic mean of the rows
};

struct EfficiencyReport {
    double params_millions = 0.0;
    double flops_e10 = 0.0;  // per 256x256 frame at the model's channel count
    double time_s = 0.0;     // mean of 100 timed single-frame forwards
};

// Per-frame metrics averaged over the sequence, all four metrics against
// the clean ground truth.
SeqMetrics sequence_metrics(const std::string& seq_id, const Sequence& restored,
                            const Sequence& clean);

// Restores every sequence of the split and aggregates metrics. `restored`
// (optional) receives the restored sequences in split order. timestamp ""
// means "now" (UTC); pass a fixed string for reproducible report bytes.
MetricsReport evaluate(const DparNet& model, const ParamNet* pnet, bool use_oracle_pmap,
                       const DatasetManifest& manifest, const std::string& split,
                       const std::string& model_id, const std::string& timestamp = "",
                       std::vector<Sequence>* restored = nullptr);

void write_metrics_report(const MetricsReport& report, const std::string& path);
// aligned console table with up/down markers in the Table-1/2 layout
std::string format_metrics_table(const MetricsReport& report);

// params/1e6, analytic FLOPs at 256x256 / 1e10, and wall time: mean of
// 100 single-frame forwards at 256x256 after 10 warmups.
EfficiencyReport benchmark_efficiency(const DparNet& model, int rounds = 100, int warmups = 10);

void write_efficiency_report(const EfficiencyReport& report, const std::string& path);

}  // namespace dparnet

#endif
