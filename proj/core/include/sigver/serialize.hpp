#pragma once

#include <string>

#include "sigver/featnet.hpp"
#include "sigver/gbt.hpp"
#include "sigver/stacker.hpp"

namespace sigver {

/// Binary model formats, little-endian throughout. Readers reject bad magic,
/// bad version, truncation and trailing bytes with CorruptFile.
///
/// SFNT (feature network): magic "SFNT", version u16, config block
/// (input_h u32, input_w u32, block count u32, per block out_channels u32 /
/// kernel u32 / stride u32, feature_dim u32, num_writers u32,
/// forgery_head u8, seed u64), then every parameter as f32 in declaration
/// order.
///
/// SGBT (boosted trees): magic "SGBT", version u16, params block (n_rounds
/// u32, max_depth u32, learning_rate f64, l2_lambda f64, min_gain f64,
/// min_child_hessian f64, n_features u32, base_margin f64), tree count u32,
/// each tree as a preorder node list (tag u8: 0 leaf + weight f64, 1
/// internal + feature u32 + threshold f64).
///
/// SENS (ensemble): magic "SENS", version u16, embedded SGBT blocks for the
/// signet and signet-f branches, then the combiner as 3 f64 (w0, w1, bias).

void save_featnet(const FeatNet& net, const std::string& path);
FeatNet load_featnet(const std::string& path);

void save_gbt(const GbtModel& model, const std::string& path);
GbtModel load_gbt(const std::string& path);

void save_ensemble(const EnsembleModel& model, const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

} // namespace sigver
