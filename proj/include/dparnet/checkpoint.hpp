#ifndef DPARNET_CHECKPOINT_HPP
#define DPARNET_CHECKPOINT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "dparnet/models.hpp"
#include "dparnet/tensor.hpp"

namespace dparnet {

struct CurvePoint {
    int epoch = 0;
    double train_loss = 0.0;
    double val_metric = 0.0;  // PSNR for restoration nets, MAE for the param net
};

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path,
                     const std::string& val_name);
std::vector<CurvePoint> read_curve_csv(const std::string& path);

// Array container shared by checkpoints and the extractor file:
//   u32 name length, name bytes, u8 dtype (0 = f32), u8 rank,
//   u16 reserved, u32 dims[rank], then little-endian f32 payload.
void write_array(std::ostream& os, const std::string& name, const Tensor& t);
Tensor read_array(std::istream& is, std::string& name);

// A checkpoint is a directory: config.json (type, architecture, epoch,
// training curve), weights/<name>.arr per parameter, optimizer/ state
// blobs, curve.csv for plotting. Loading validates every name and shape
// against the config; a mismatch is an error, never a partial load.
void save_dparnet_checkpoint(const DparNet& model, const std::string& dir, int epoch,
                             const std::vector<CurvePoint>& curve,
                             const std::vector<std::pair<std::string, Tensor>>& opt_state = {});
DparNet load_dparnet_checkpoint(const std::string& dir);

void save_param_net_checkpoint(const ParamNet& net, const std::string& dir, int epoch,
                               const std::vector<CurvePoint>& curve,
                               const std::vector<std::pair<std::string, Tensor>>& opt_state = {});
ParamNet load_param_net_checkpoint(const std::string& dir);

// "dparnet" or "param_net"; throws if dir is not a checkpoint
std::string checkpoint_type(const std::string& dir);
int checkpoint_epoch(const std::string& dir);
std::vector<CurvePoint> checkpoint_curve(const std::string& dir);

}  // namespace dparnet

#endif
