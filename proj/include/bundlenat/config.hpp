#pragma once

namespace bundlenat {

// Architecture knobs shared by train / eval / infer. d() is the working
// width: concatenated preference (2 * d_e) must equal the GNN width d_c.
struct ModelConfig {
    int d_e = 64;        // preference embedding size per table
    int gnn_layers = 2;
    int depth = 2;       // encoder and decoder block count
    int heads = 4;
    int ffn_mult = 4;    // encoder FFN hidden width multiplier
    double dropout = 0.0;
    bool layer_norm = false;
    bool use_pref = true;
    bool use_compat = true;
    int n_items = 0;
    int n_users = 0;

    int d() const { return 2 * d_e; }
    int d_head() const { return d() / heads; }
    int ffn_width() const { return ffn_mult * d(); }
};

}  // namespace bundlenat
