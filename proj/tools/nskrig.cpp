#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "nskrig/errors.hpp"
#include "nskrig/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::string seed;
  std::string out;
  std::string model;
  std::string grid;
  std::string basis;
  std::string radius;
  std::string bandwidth;
  std::string input;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key = value settings file");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--model", f.model, "model family (iso, aniso, ns, ns-mixture, ns-covariate, conv)");
  cmd->add_option("--grid", f.grid, "xmin,xmax,ymin,ymax,nx,ny (row-major, x fastest)");
  cmd->add_option("--basis", f.basis, "basis grid size M (M x M centroids)");
  cmd->add_option("--radius", f.radius, "local-fit neighborhood radius");
  cmd->add_option("--bandwidth", f.bandwidth, "mixture kernel bandwidth");
  cmd->add_option("--input", f.input, "input data CSV");
}

nskrig::RunConfig assemble(const std::string& mode, const Flags& f) {
  nskrig::RunConfig config;
  config.mode = mode;
  if (!f.config.empty()) config.keys = nskrig::parse_config_file(f.config);
  // flags override config-file settings
  if (!f.seed.empty()) config.keys["seed"] = f.seed;
  if (!f.out.empty()) config.keys["out"] = f.out;
  if (!f.model.empty()) config.keys["model"] = f.model;
  if (!f.grid.empty()) config.keys["grid"] = f.grid;
  if (!f.basis.empty()) config.keys["basis"] = f.basis;
  if (!f.radius.empty()) config.keys["radius"] = f.radius;
  if (!f.bandwidth.empty()) config.keys["bandwidth"] = f.bandwidth;
  if (!f.input.empty()) config.keys["input"] = f.input;
  return config;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"nskrig: simulation, likelihood fitting, and kriging for "
               "nonstationary spatial Gaussian processes"};
  app.require_subcommand(1);

  Flags flags;
  const char* modes[] = {"simulate", "fit", "predict", "ellipses"};
  const char* descriptions[] = {
      "draw Gaussian-process realizations on a grid or at data locations",
      "maximum-likelihood fit of a covariance model to a data CSV",
      "universal kriging means and standard errors from a fitted model",
      "export the kernel ellipse field of a fitted nonstationary model"};
  for (int i = 0; i < 4; ++i) add_common_flags(app.add_subcommand(modes[i], descriptions[i]), flags);

  CLI11_PARSE(app, argc, argv);

  const std::string mode = app.get_subcommands().front()->get_name();
  try {
    nskrig::run(assemble(mode, flags));
  } catch (const nskrig::error& e) {
    std::fprintf(stderr, "error code=%d message=%s\n", static_cast<int>(e.code()), e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error code=2 message=%s\n", e.what());
    return 2;
  }
  return 0;
}
