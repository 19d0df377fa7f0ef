#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "mos/commands.hpp"

namespace {

struct ProjFlags {
  double fov_up_deg = 3.0;
  double fov_down_deg = 25.0;
};

void add_proj_options(CLI::App* cmd, mos::ProjectionConfig& proj,
                      ProjFlags& flags) {
  cmd->add_option("--height", proj.height, "range image rows")
      ->capture_default_str();
  cmd->add_option("--width", proj.width, "range image columns")
      ->capture_default_str();
  cmd->add_option("--fov-up", flags.fov_up_deg, "upper field of view, degrees")
      ->capture_default_str();
  cmd->add_option("--fov-down", flags.fov_down_deg,
                  "lower field of view, degrees (positive)")
      ->capture_default_str();
}

void apply_proj_flags(mos::ProjectionConfig& proj, const ProjFlags& flags) {
  proj.fov_up = mos::deg2rad(flags.fov_up_deg);
  proj.fov_down = mos::deg2rad(flags.fov_down_deg);
}

CLI::Option* data_option(CLI::App* cmd, std::filesystem::path& target) {
  return cmd->add_option("--data", target, "dataset root (sequences/<id>/...)")
      ->envname("MOS_DATASET_ROOT")
      ->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"range-image moving object segmentation"};
  app.require_subcommand(1);

  // infer
  auto infer = std::make_shared<mos::InferOptions>();
  auto infer_flags = std::make_shared<ProjFlags>();
  {
    CLI::App* cmd = app.add_subcommand("infer", "segment sequences");
    data_option(cmd, infer->dataset_root);
    cmd->add_option("--out", infer->output_root, "prediction output root")
        ->required();
    cmd->add_option("--seq", infer->sequences, "sequence ids")->required();
    cmd->add_option("--method", infer->pipeline.method,
                    "residual, residual-rg or learned")
        ->capture_default_str();
    cmd->add_option("--n", infer->pipeline.n_residual,
                    "residual channels (history length)")
        ->capture_default_str();
    add_proj_options(cmd, infer->pipeline.proj, *infer_flags);
    cmd->add_option("--tau", infer->pipeline.heuristic.tau, "residual threshold")
        ->capture_default_str();
    cmd->add_option("--min-votes", infer->pipeline.heuristic.min_votes,
                    "channels that must exceed tau")
        ->capture_default_str();
    cmd->add_option("--margin", infer->pipeline.heuristic.free_space_margin,
                    "free-space margin, meters")
        ->capture_default_str();
    cmd->add_option("--grow-tol", infer->pipeline.heuristic.grow_tolerance,
                    "region growing range tolerance, meters")
        ->capture_default_str();
    cmd->add_option("--min-region", infer->pipeline.heuristic.min_region,
                    "smallest kept region, pixels")
        ->capture_default_str();
    cmd->add_flag("--knn", infer->pipeline.apply_knn, "kNN label cleaning");
    cmd->add_option("--knn-k", infer->pipeline.knn.k, "kNN votes")
        ->capture_default_str();
    cmd->add_option("--knn-window", infer->pipeline.knn.window, "kNN window")
        ->capture_default_str();
    cmd->add_option("--knn-cutoff", infer->pipeline.knn.cutoff,
                    "kNN range cutoff, meters")
        ->capture_default_str();
    cmd->add_option("--model", infer->model_path, "model file for 'learned'");
    cmd->add_option("--noise-units", infer->pipeline.noise_units,
                    "odometry noise units")
        ->capture_default_str();
    cmd->add_option("--noise-seed", infer->pipeline.noise_seed, "noise seed")
        ->capture_default_str();
    cmd->add_option("--class-map", infer->class_map_path, "class map file");
    cmd->add_option("--dump", infer->dump_dir, "debug dump directory");
    cmd->add_flag("--timings", infer->print_timings, "print per-stage timings");
    auto serial = std::make_shared<bool>(false);
    cmd->add_flag("--serial", *serial, "serial reference kernels");
    cmd->callback([infer, infer_flags, serial] {
      apply_proj_flags(infer->pipeline.proj, *infer_flags);
      infer->pipeline.exec = *serial ? mos::Exec::Serial : mos::Exec::Parallel;
      mos::cmd_infer(*infer);
    });
  }

  // eval
  auto eval = std::make_shared<mos::EvalOptions>();
  {
    CLI::App* cmd = app.add_subcommand("eval", "score predictions");
    data_option(cmd, eval->dataset_root);
    cmd->add_option("--pred", eval->pred_root, "prediction root")->required();
    cmd->add_option("--seq", eval->sequences, "sequence ids")->required();
    cmd->add_option("--report", eval->report_path, "key-value report file");
    cmd->add_option("--class-map", eval->class_map_path, "class map file");
    cmd->callback([eval] { mos::cmd_eval(*eval); });
  }

  // train
  auto train = std::make_shared<mos::TrainOptions>();
  auto train_flags = std::make_shared<ProjFlags>();
  {
    CLI::App* cmd = app.add_subcommand("train", "train the learned head");
    data_option(cmd, train->dataset_root);
    cmd->add_option("--seq", train->sequences, "training sequence ids")
        ->required();
    cmd->add_option("--out", train->model_out, "model output file")->required();
    cmd->add_option("--n", train->n_residual, "residual channels")
        ->capture_default_str();
    add_proj_options(cmd, train->proj, *train_flags);
    cmd->add_option("--window", train->window, "patch window")
        ->capture_default_str();
    cmd->add_option("--hidden", train->hidden, "hidden layer sizes")
        ->capture_default_str();
    cmd->add_option("--lr", train->train.lr, "learning rate")
        ->capture_default_str();
    cmd->add_option("--batch", train->train.batch, "batch size")
        ->capture_default_str();
    cmd->add_option("--epochs", train->train.epochs, "epochs")
        ->capture_default_str();
    cmd->add_option("--steps", train->train.max_steps_per_epoch,
                    "steps per epoch cap")
        ->capture_default_str();
    cmd->add_option("--moving-weight", train->train.moving_weight,
                    "loss weight of the moving class")
        ->capture_default_str();
    cmd->add_option("--train-seed", train->train.seed, "training seed")
        ->capture_default_str();
    cmd->add_option("--noise-units", train->noise_units, "odometry noise units")
        ->capture_default_str();
    cmd->add_option("--noise-seed", train->noise_seed, "noise seed")
        ->capture_default_str();
    cmd->add_option("--class-map", train->class_map_path, "class map file");
    cmd->callback([train, train_flags] {
      apply_proj_flags(train->proj, *train_flags);
      mos::cmd_train(*train);
    });
  }

  // synth
  auto synth = std::make_shared<mos::SynthOptions>();
  {
    CLI::App* cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    cmd->add_option("--preset", synth->preset, "scene preset")
        ->capture_default_str();
    cmd->add_option("--out", synth->out_root, "dataset root to write")
        ->required();
    cmd->add_option("--seq", synth->sequence_ids,
                    "sequence ids (seed advances per id)")
        ->capture_default_str();
    cmd->add_option("--seed", synth->seed, "placement seed")
        ->capture_default_str();
    cmd->callback([synth] { mos::cmd_synth(*synth); });
  }

  // clean-map
  auto clean = std::make_shared<mos::CleanMapOptions>();
  {
    CLI::App* cmd = app.add_subcommand("clean-map", "build a static map");
    data_option(cmd, clean->dataset_root);
    cmd->add_option("--seq", clean->sequence, "sequence id")->required();
    cmd->add_option("--pred", clean->pred_root,
                    "prediction root (default: ground-truth labels)");
    cmd->add_option("--out", clean->out_ply, "output PLY file")->required();
    cmd->add_option("--voxel", clean->voxel, "voxel size, meters (0 keeps all)")
        ->capture_default_str();
    cmd->add_flag("--ascii", clean->ascii, "ASCII PLY instead of binary");
    cmd->add_option("--class-map", clean->class_map_path, "class map file");
    cmd->callback([clean] { mos::cmd_clean_map(*clean); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
