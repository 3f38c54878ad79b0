#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "oqm_cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"operator-valued quantum measures: generation, extension, dilation, variation"};
  app.require_subcommand(1);
  app.set_config("--config");

  oqm_cli::GenOptions g;
  auto* gen = app.add_subcommand("gen", "generate a measure file");
  gen->add_option("--kind", g.kind, "linear | cp | counterexample_m2 | abelian")->required();
  gen->add_option("--algebra", g.algebra, "block sizes, e.g. 2,3")->delimiter(',');
  gen->add_option("--d", g.d, "target dimension (linear, cp)");
  gen->add_option("--values", g.values, "abelian atom values, e.g. --values=3,-4")->delimiter(',');
  gen->add_option("--num-kraus", g.num_kraus, "Kraus terms (cp)");
  gen->add_option("--directions", g.directions, "table directions (counterexample_m2)");
  gen->add_option("--seed", g.seed, "random seed");
  gen->add_option("--out", g.out, "measure file to write")->required();
  gen->add_option("--kraus-out", g.kraus_out, "Kraus sidecar file (cp)");

  oqm_cli::ExtendOptions e;
  auto* extend = app.add_subcommand("extend", "linear extension report");
  extend->add_option("--in", e.in, "measure file")->required();
  extend->add_flag("--expect-counterexample", e.expect_counterexample,
                   "pass when the extension residual certifies nonlinearity");
  extend->add_option("--budget", e.budget, "search budget");
  extend->add_option("--tol", e.tol, "extension residual tolerance");
  extend->add_option("--seed", e.seed, "random seed");
  extend->add_option("--out", e.out, "report file");

  oqm_cli::DilateOptions d;
  auto* dilate = app.add_subcommand("dilate", "dilation report under a chosen norm");
  dilate->add_option("--in", d.in, "measure file")->required();
  dilate->add_option("--norm", d.norm, "E | D | pV");
  dilate->add_option("--p", d.p, "variation exponent (norm pV)");
  dilate->add_option("--kraus", d.kraus_in, "Kraus file for the concrete dilation (norm D)");
  dilate->add_option("--budget", d.budget, "search budget");
  dilate->add_option("--seed", d.seed, "random seed");
  dilate->add_option("--out", d.out, "report file");

  oqm_cli::PvarOptions p;
  auto* pvar = app.add_subcommand("pvar", "p-variation estimate report");
  pvar->add_option("--in", p.in, "measure file")->required();
  pvar->add_option("--p", p.p, "variation exponent");
  pvar->add_option("--proj", p.proj, "identity | random | atoms:i,j,...");
  pvar->add_option("--budget", p.budget, "search budget");
  pvar->add_option("--seed", p.seed, "random seed");
  pvar->add_option("--out", p.out, "report file");

  oqm_cli::VerifyOptions v;
  auto* verify = app.add_subcommand("verify", "full invariant suite report");
  verify->add_option("--in", v.in, "measure file")->required();
  verify->add_option("--budget", v.budget, "search budget");
  verify->add_option("--seed", v.seed, "random seed");
  verify->add_option("--out", v.out, "report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? 0 : 2;
  }

  try {
    nlohmann::json report;
    if (*gen) report = oqm_cli::cmd_gen(g);
    else if (*extend) report = oqm_cli::cmd_extend(e);
    else if (*dilate) report = oqm_cli::cmd_dilate(d);
    else if (*pvar) report = oqm_cli::cmd_pvar(p);
    else report = oqm_cli::cmd_verify(v);
    std::cout << report.dump(2) << "\n";
    return oqm_cli::exit_code_for(report);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
}
