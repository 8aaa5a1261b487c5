#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bundlenat/interactions.hpp"
#include "bundlenat/rng.hpp"
#include "bundlenat/tensor.hpp"

namespace bundlenat {

// Pretrained user/item embeddings; scores are dot products e_u . e_v.
struct PreferenceEmbeddings {
    Tensor user_table;  // n_users x d_e
    Tensor item_table;  // n_items x d_e
    int d_e() const { return static_cast<int>(user_table.cols()); }
};

struct PretrainConfig {
    int d_e = 64;
    int epochs = 30;
    double lr = 0.05;
    double weight_decay = 1e-5;
    int negatives_per_positive = 1;
    std::uint64_t seed = 11;
};

struct LeaveOneOut {
    std::vector<std::pair<int, int>> train;
    std::vector<std::pair<int, int>> held_out;  // one pair per eligible user
};

// Holds out one random interaction per user with >= 2 interactions; users
// with a single interaction go entirely to train.
LeaveOneOut leave_one_out_split(const std::vector<std::pair<int, int>>& user_item, Rng rng);

// -ln sigmoid(score_pos - score_neg), computed in stable softplus form.
double bpr_loss(double score_pos, double score_neg);

struct PretrainResult {
    PreferenceEmbeddings emb;
    std::vector<double> epoch_losses;
};

// Matrix factorization trained with the BPR pairwise objective by SGD over
// (user, positive, sampled negative) triples; N(0, 0.01) init.
PretrainResult train_mf_bpr(const InteractionTables& tables, const PretrainConfig& cfg);

// Mean over held-out pairs of the fraction of sampled negatives scored
// strictly below the positive (ties count 0.5).
double auc_eval(const PreferenceEmbeddings& emb, const std::vector<std::pair<int, int>>& held_out,
                const std::vector<std::pair<int, int>>& all_pairs, int n_neg_samples, Rng rng);

void export_embeddings(const PreferenceEmbeddings& emb, const std::string& path, std::uint64_t seed,
                       const PretrainConfig& cfg);
PreferenceEmbeddings import_embeddings(const std::string& path);

}  // namespace bundlenat
