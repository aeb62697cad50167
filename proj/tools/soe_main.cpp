#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soe/config.hpp"
#include "soe/optim.hpp"
#include "soe/phantom.hpp"
#include "soe/train.hpp"
#include "soe/version.hpp"
#include "soe/volume.hpp"

namespace {

using namespace soe;

Config load_cfg(const std::string& path) {
  Config cfg = path.empty() ? Config{} : read_config(path);
  cfg.resolve();
  return cfg;
}

std::vector<uint64_t> parse_seed_list(const std::string& s) {
  std::vector<uint64_t> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stoull(part));
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

int cmd_gen_data(const std::string& config, const std::string& out, int64_t seed, int n_samples,
                 int dim) {
  Config cfg = load_cfg(config);
  if (seed >= 0) cfg.data_seed = static_cast<uint64_t>(seed);
  if (n_samples >= 0) cfg.data_n_samples = n_samples;
  if (dim > 0) cfg.data_dim = dim;

  const std::vector<Phantom> phantoms =
      generate_phantoms(cfg.data_n_samples, cfg.data_dim, cfg.data_seed);
  std::vector<uint64_t> ids(phantoms.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  SplitSpec spec;
  spec.seed = cfg.data_seed;
  const std::vector<Split> splits =
      phantoms.empty() ? std::vector<Split>{} : assign_splits(ids, spec);
  write_dataset(out, phantoms, splits);
  write_resolved(cfg, out + "/config.resolved");
  std::cout << "wrote " << phantoms.size() << " phantoms (dim " << cfg.data_dim << ") to " << out
            << "\n";
  return 0;
}

int cmd_pretrain(const std::string& config, const std::string& data_dir, const std::string& out,
                 int64_t seed) {
  Config cfg = load_cfg(config);
  if (seed >= 0) cfg.train_seed = static_cast<uint64_t>(seed);
  const Dataset data = load_dataset(data_dir);
  const PretrainResult res = pretrain(cfg, data, out);
  std::cout << "pretraining done; best validation objective " << res.best_val << "\n"
            << "checkpoint: " << res.best_ckpt << "\n";
  return 0;
}

int cmd_finetune(const std::string& config, const std::string& data_dir, const std::string& ckpt,
                 const std::string& out, int64_t seed, const std::string& task,
                 const std::string& augment) {
  Config cfg = load_cfg(config);
  if (seed >= 0) cfg.train_seed = static_cast<uint64_t>(seed);
  if (!task.empty()) cfg.train_task = task_from_name(task);
  if (!augment.empty()) cfg.train_augment = condition_from_name(augment);
  const Dataset data = load_dataset(data_dir);
  const FinetuneResult res = finetune(cfg, data, ckpt, out);
  std::cout << "fine-tuning done; best validation metric " << res.best_val_metric << "\n"
            << "checkpoint: " << res.best_ckpt << "\n";
  return 0;
}

int cmd_evaluate(const std::string& config, const std::string& data_dir, const std::string& ckpt,
                 const std::string& out, const std::string& condition, const std::string& split,
                 const std::string& task) {
  Config cfg = load_cfg(config);
  if (!task.empty()) cfg.train_task = task_from_name(task);
  const Dataset data = load_dataset(data_dir);
  const EvalResult r =
      evaluate(cfg, data, ckpt, condition_from_name(condition), split_from_name(split), out);
  if (r.task == TaskKind::kClassify)
    std::cout << "bacc " << r.cls.bacc << " f1 " << r.cls.f1 << "\n";
  else
    std::cout << "r2 " << r.reg.r2 << " mae " << r.reg.mae << "\n";
  return 0;
}

int cmd_grid(const std::string& config, const std::string& data_dir, const std::string& out,
             const std::string& seeds) {
  Config cfg = load_cfg(config);
  const Dataset data = load_dataset(data_dir);
  const std::vector<uint64_t> seed_list = parse_seed_list(seeds);

  std::vector<GridCell> agg;
  for (uint64_t s : seed_list) {
    Config scfg = cfg;
    scfg.train_seed = s;
    const GridResult g = robustness_grid(scfg, data, out + "/seed" + std::to_string(s));
    if (agg.empty()) {
      agg = g.cells;
    } else {
      for (size_t i = 0; i < agg.size(); ++i) {
        agg[i].scratch += g.cells[i].scratch;
        agg[i].soe += g.cells[i].soe;
      }
    }
  }
  for (GridCell& c : agg) {
    c.scratch /= static_cast<double>(seed_list.size());
    c.soe /= static_cast<double>(seed_list.size());
    c.pct_increase = 100.0 * (c.soe - c.scratch) / c.scratch;
  }
  write_grid_csv(out + "/grid.csv", agg);
  int positive = 0;
  for (const GridCell& c : agg)
    if (c.metric == "bacc" && c.pct_increase > 0.0) ++positive;
  std::cout << "grid complete over " << seed_list.size() << " seed(s); " << positive
            << "/6 bacc cells positive; " << out << "/grid.csv\n";
  return 0;
}

int cmd_rotate(const std::string& in, const std::string& out, const std::string& axis_str,
               double degrees) {
  std::array<double, 3> axis{};
  std::stringstream ss(axis_str);
  std::string part;
  int i = 0;
  while (std::getline(ss, part, ',') && i < 3) axis[i++] = std::stod(part);
  if (i != 3) throw ConfigError("--axis expects three comma-separated components");
  double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (norm == 0.0) throw ConfigError("--axis must be non-zero");
  for (double& a : axis) a /= norm;

  const Volume v = read_volume(in);
  const RotationMatrix r = from_axis_angle({axis, degrees * M_PI / 180.0});
  write_volume(out, rotate(v, r));
  std::cout << "rotated " << in << " by " << degrees << " deg, wrote " << out << "\n";
  return 0;
}

int cmd_gradcheck(int dim, int samples, int64_t seed) {
  Config cfg;
  cfg.encoder_input_dim = dim;
  cfg.data_dim = dim;
  cfg.encoder_dropout_p = 0.0;
  cfg.vn_d_lift = 8;
  cfg.vn_d_out = 8;
  cfg.train_seed = seed >= 0 ? static_cast<uint64_t>(seed) : 7;
  cfg.resolve();

  SoeModel model = build_model(cfg, /*with_head=*/false);
  Rng data_rng(hash_mix(cfg.train_seed, 0xDA7Aull));
  const int B = 2;
  std::vector<Volume> vols;
  std::vector<RotationMatrix> rs;
  for (int b = 0; b < B; ++b) {
    Volume v = Volume::zeros(dim);
    for (float& x : v.data()) x = static_cast<float>(data_rng.uniform(0.0, 1.0));
    rs.push_back(sample_uniform(data_rng, 15.0 * M_PI / 180.0, 45.0 * M_PI / 180.0).first);
    vols.push_back(std::move(v));
  }
  std::vector<Volume> rotated;
  for (int b = 0; b < B; ++b) rotated.push_back(rotate(vols[b], rs[b]));

  auto build = [&](Tape& tape) -> int {
    std::vector<const Volume*> p1, p2;
    for (int b = 0; b < B; ++b) {
      p1.push_back(&vols[b]);
      p2.push_back(&rotated[b]);
    }
    const int x1 = tape.constant(volumes_to_batch(p1));
    const int x2 = tape.constant(volumes_to_batch(p2));
    const int f1 = model.encoder->forward(tape, x1, Mode::kEval, cfg.train_seed, 0);
    const int f2 = model.encoder->forward(tape, x2, Mode::kEval, cfg.train_seed, 0);
    const int z1 = model.vn->forward(tape, f1);
    const int z2 = model.vn->forward(tape, f2);
    return combined_loss_node(tape, z1, z2, f1, f2, rs, cfg.loss_lambda, cfg.loss_eps).l_comb;
  };

  Rng pick_rng(hash_mix(cfg.train_seed, 0x912Cull));
  std::vector<Parameter*> params = model.trunk_parameters();
  const double err =
      grad_check<float>(build, params, /*eps=*/1e-3, /*n_samples=*/samples, &pick_rng);
  std::printf("gradcheck: max rel error %.6g over %d sampled coordinates (dim %d)\n", err,
              samples, dim);
  return err < 1e-2 ? 0 : 2;
}

int cmd_inspect(const std::string& ckpt) {
  const std::vector<CheckpointEntry> entries = list_checkpoint(ckpt);
  size_t total = 0;
  for (const CheckpointEntry& e : entries) {
    std::cout << (e.is_buffer ? "buffer " : "param  ") << e.name << " " << shape_str(e.shape)
              << "\n";
    if (!e.is_buffer) total += shape_numel(e.shape);
  }
  std::cout << entries.size() << " entries, " << total << " trainable scalars\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"SO(3)-equivariant volume representation learning"};
  app.set_version_flag("--version", soe::kVersion);
  app.require_subcommand(1);

  std::string config, data_dir, out, ckpt, axis{"0,0,1"}, condition{"none"}, split{"test"};
  std::string task, augment, seeds{"1"};
  int64_t seed = -1;
  int n_samples = -1, dim = -1, gc_dim = 8, gc_samples = 50;
  double degrees = 90.0;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic phantom dataset");
  gen->add_option("--config", config);
  gen->add_option("--out", out)->required();
  gen->add_option("--seed", seed);
  gen->add_option("--n", n_samples);
  gen->add_option("--dim", dim);

  auto* pre = app.add_subcommand("pretrain", "Equivariance pretext training");
  pre->add_option("--config", config);
  pre->add_option("--data", data_dir)->required();
  pre->add_option("--out", out)->required();
  pre->add_option("--seed", seed);

  auto* fin = app.add_subcommand("finetune", "Supervised fine-tuning with rotation robustness");
  fin->add_option("--config", config);
  fin->add_option("--data", data_dir)->required();
  fin->add_option("--ckpt", ckpt)->description("trunk checkpoint; omit to train from scratch");
  fin->add_option("--out", out)->required();
  fin->add_option("--seed", seed);
  fin->add_option("--task", task)->check(CLI::IsMember({"classify", "regress"}));
  fin->add_option("--augment", augment)->check(CLI::IsMember({"none", "mild", "right_angle"}));

  auto* ev = app.add_subcommand("evaluate", "Evaluate a fine-tuned checkpoint");
  ev->add_option("--config", config);
  ev->add_option("--data", data_dir)->required();
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--out", out);
  ev->add_option("--condition", condition)->check(CLI::IsMember({"none", "mild", "right_angle"}));
  ev->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--task", task)->check(CLI::IsMember({"classify", "regress"}));

  auto* grid = app.add_subcommand("robustness-grid", "Pretrained-vs-scratch rotation grid");
  grid->add_option("--config", config);
  grid->add_option("--data", data_dir)->required();
  grid->add_option("--out", out)->required();
  grid->add_option("--seeds", seeds)->description("comma-separated training seeds");

  auto* rot = app.add_subcommand("rotate", "Rotate a SOEV volume file");
  rot->add_option("--in", data_dir)->required();
  rot->add_option("--out", out)->required();
  rot->add_option("--axis", axis)->description("axis as x,y,z (normalized internally)");
  rot->add_option("--degrees", degrees);

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the full objective");
  gc->add_option("--dim", gc_dim)->check(CLI::IsMember({8, 16}));
  gc->add_option("--samples", gc_samples)->check(CLI::PositiveNumber);
  gc->add_option("--seed", seed);

  auto* insp = app.add_subcommand("inspect-ckpt", "List checkpoint contents");
  insp->add_option("--ckpt", ckpt)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config, out, seed, n_samples, dim);
    if (pre->parsed()) return cmd_pretrain(config, data_dir, out, seed);
    if (fin->parsed()) return cmd_finetune(config, data_dir, ckpt, out, seed, task, augment);
    if (ev->parsed()) return cmd_evaluate(config, data_dir, ckpt, out, condition, split, task);
    if (grid->parsed()) return cmd_grid(config, data_dir, out, seeds);
    if (rot->parsed()) return cmd_rotate(data_dir, out, axis, degrees);
    if (gc->parsed()) return cmd_gradcheck(gc_dim, gc_samples, seed);
    if (insp->parsed()) return cmd_inspect(ckpt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
