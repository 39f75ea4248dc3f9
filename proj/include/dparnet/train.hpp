#ifndef DPARNET_TRAIN_HPP
#define DPARNET_TRAIN_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "dparnet/checkpoint.hpp"
#include "dparnet/dataset.hpp"
#include "dparnet/layers.hpp"
#include "dparnet/loss.hpp"
#include "dparnet/models.hpp"

namespace dparnet {

struct TrainConfig {
    double lr = 1e-4;
    int epochs = 100;
    double alpha1 = 1.0;
    double alpha2 = 0.05;
    int batch_size = 4;
    uint64_t seed = 0;
    int crop = 256;
    int val_every = 1;
    std::string extractor_path;   // required when alpha2 > 0
    bool use_oracle_pmap = false;  // feed ground-truth maps instead of predictions

    void validate() const;
};

// Adam with the canonical (0.9, 0.999) betas, no weight decay.
class Adam {
public:
    Adam(ParamList params, double lr);

    void zero_grad();
    void step();

    int64_t steps() const { return t_; }
    std::vector<std::pair<std::string, Tensor>> state() const;

private:
    struct Slot {
        ParamEntry entry;
        Tensor m, v;
    };
    std::vector<Slot> slots_;
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
};

std::vector<Tensor> snapshot_params(const ParamList& params);
void restore_params(const ParamList& params, const std::vector<Tensor>& snap);

struct TrainResult {
    std::vector<CurvePoint> curve;
    int best_epoch = 0;
    double best_val = 0.0;
    std::vector<std::pair<std::string, Tensor>> opt_state;
};

// L1 regression of the parameter net against ground-truth maps; the model
// ends up holding the best-validation weights (val metric: MAE, lower
// better).
TrainResult train_param_net(ParamNet& net, const DatasetManifest& manifest,
                            const TrainConfig& cfg, std::ostream* log = nullptr);

// Restoration training: crops+flips, total loss on the center frame,
// per-epoch validation PSNR (higher better), best-val weights retained.
// frozen_pnet supplies predicted maps when the variant needs them and
// use_oracle_pmap is off.
TrainResult train_dparnet(DparNet& model, const DatasetManifest& manifest, const TrainConfig& cfg,
                          const ParamNet* frozen_pnet, std::ostream* log = nullptr);

// Mean PSNR of restored center frames over a split (used for validation
// and by tests).
double validate_psnr(const DparNet& model, const DatasetManifest& manifest,
                     const std::vector<std::string>& ids, const ParamNet* pnet,
                     bool use_oracle_pmap);

}  // namespace dparnet

#endif
