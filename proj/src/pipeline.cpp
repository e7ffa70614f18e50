#include "stepsrl/pipeline.hpp"

#include "stepsrl/util.hpp"

namespace stepsrl {

ModelConfig make_model_config(const RunConfig& cfg,
                              const PhonemeInventory& inventory) {
  ModelConfig mc;
  mc.d_mfcc = cfg.d_w;
  mc.d_w = cfg.d_w;
  mc.H = cfg.H;
  mc.d = cfg.d;
  mc.d_e = cfg.d_e;
  mc.d_a = aux_dim(parse_aux_mode(cfg.aux_mode));
  mc.n = cfg.n;
  mc.m = cfg.m;
  mc.V = inventory.size();
  mc.k = 50;
  mc.sops_id = inventory.sops();
  mc.eops_id = inventory.eops();
  mc.pad_id = inventory.pad();
  mc.normalize_attention = cfg.normalize_attention;
  return mc;
}

PreparedData prepare_data(const RunConfig& raw) {
  PreparedData data;
  data.cfg = raw.resolved();
  auto records = load_corpus(data.cfg.corpus_dir);
  data.utterance_count = records.size();
  data.inventory = build_inventory(records);
  if (data.cfg.n == 0)
    data.cfg.n = compute_segment_frames(records, data.cfg.mfcc);
  data.embeddings = load_vec_text(data.cfg.embedding_path);
  if (data.embeddings.dim() != data.cfg.d_w)
    throw ConfigError("embedding file " + data.cfg.embedding_path + " has dim " +
                      std::to_string(data.embeddings.dim()) +
                      " but config requires d_w = " +
                      std::to_string(data.cfg.d_w));
  data.model = make_model_config(data.cfg, data.inventory);

  const AuxMode aux = parse_aux_mode(data.cfg.aux_mode);
  if (data.cfg.split_file.empty()) {
    data.train_examples =
        build_examples(records, data.cfg.m, data.inventory, data.embeddings,
                       aux, data.cfg.mfcc, data.cfg.n);
  } else {
    auto [train_recs, test_recs] =
        split_train_test(records, data.cfg.split_file);
    data.train_examples =
        build_examples(train_recs, data.cfg.m, data.inventory, data.embeddings,
                       aux, data.cfg.mfcc, data.cfg.n);
    data.test_examples =
        build_examples(test_recs, data.cfg.m, data.inventory, data.embeddings,
                       aux, data.cfg.mfcc, data.cfg.n);
  }
  return data;
}

}  // namespace stepsrl
