// Command line front end for the sblr library.
//
// Subcommands:
//   gen         write a synthetic two-cluster dataset
//   train       fit a model and optionally save it plus an iteration trace
//   predict     score a dataset with a saved model
//   bench       wall-clock comparison of the two bilinear solvers
//   trace       long-run convergence diagnostics against a reference iterate
//   gridsearch  cross-validated sweep over regularization tuples
//   import-csv  convert a CSV dataset to the binary format
//   export-csv  convert a binary dataset to CSV

#include <CLI11.hpp>

#include "sblr/sblr.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"sparse bilinear logistic regression toolkit"};
    app.require_subcommand(1);

    using namespace sblr::cli;

    GenOptions gen;
    CLI::App* genCmd = app.add_subcommand("gen", "generate a synthetic dataset");
    genCmd->add_option("--n", gen.n, "number of samples (even)")->check(CLI::Range(2, 1 << 24));
    genCmd->add_option("--s", gen.s, "sample rows")->check(CLI::PositiveNumber);
    genCmd->add_option("--t", gen.t, "sample columns")->check(CLI::PositiveNumber);
    genCmd->add_option("--shift", gen.shift, "class mean offset");
    genCmd->add_option("--seed", gen.seed, "rng seed");
    genCmd->add_option("--out", gen.out, "output dataset path")->required();

    TrainOptions train;
    CLI::App* trainCmd = app.add_subcommand("train", "fit a model");
    trainCmd->add_option("--data", train.data, "training dataset")->required();
    trainCmd->add_option("--solver", train.solver, "bcpd|bcd|linear|sparse-linear|ova|multinomial")
        ->check(CLI::IsMember({"bcpd", "bcd", "linear", "sparse-linear", "ova", "multinomial"}));
    trainCmd->add_option("--rank", train.rank, "factor rank")->check(CLI::PositiveNumber);
    trainCmd->add_option("--mu1", train.mu1, "l1 weight on U")->check(CLI::NonNegativeNumber);
    trainCmd->add_option("--mu2", train.mu2, "l2 weight on U")->check(CLI::NonNegativeNumber);
    trainCmd->add_option("--nu1", train.nu1, "l1 weight on V")->check(CLI::NonNegativeNumber);
    trainCmd->add_option("--nu2", train.nu2, "l2 weight on V")->check(CLI::NonNegativeNumber);
    trainCmd->add_option("--lambda", train.lambda, "l1 weight for sparse-linear")
        ->check(CLI::NonNegativeNumber);
    trainCmd->add_option("--tol", train.tol, "relative-error stopping tolerance")
        ->check(CLI::PositiveNumber);
    trainCmd->add_option("--max-iter", train.maxIter, "iteration cap")
        ->check(CLI::Range(1, 1 << 24));
    trainCmd->add_option("--inner-tol", train.innerTol, "subproblem tolerance (bcd)")
        ->check(CLI::PositiveNumber);
    trainCmd->add_option("--inner-max-iter", train.innerMaxIter, "subproblem iteration cap (bcd)")
        ->check(CLI::Range(1, 1 << 24));
    trainCmd->add_option("--model-out", train.modelOut, "where to save the fitted model");
    trainCmd->add_option("--trace-out", train.traceOut, "where to save the iteration trace CSV");

    PredictOptions predict;
    CLI::App* predictCmd = app.add_subcommand("predict", "score a dataset with a saved model");
    predictCmd->add_option("--model", predict.model, "saved model path")->required();
    predictCmd->add_option("--data", predict.data, "dataset to score")->required();
    predictCmd->add_option("--out", predict.out, "predictions CSV path")->required();

    BenchOptions bench;
    CLI::App* benchCmd = app.add_subcommand("bench", "compare solver wall-clock times");
    benchCmd->add_option("--sizes", bench.sizes, "square sample sizes to sweep");
    benchCmd->add_option("--size-cap", bench.sizeCap, "largest allowed size")
        ->check(CLI::PositiveNumber);
    benchCmd->add_option("--n", bench.n, "samples per dataset")->check(CLI::Range(2, 1 << 24));
    benchCmd->add_option("--reps", bench.reps, "repetitions per size")
        ->check(CLI::PositiveNumber);
    benchCmd->add_option("--rank", bench.rank, "factor rank")->check(CLI::PositiveNumber);
    benchCmd->add_option("--config", bench.config, "ridge-dominated|l1-dominated")
        ->check(CLI::IsMember({"ridge-dominated", "l1-dominated"}));
    benchCmd->add_option("--solvers", bench.solvers, "both|bcpd|bcd")
        ->check(CLI::IsMember({"both", "bcpd", "bcd"}));
    benchCmd->add_option("--tol", bench.tol, "stopping tolerance")->check(CLI::PositiveNumber);
    benchCmd->add_option("--max-iter", bench.maxIter, "iteration cap")
        ->check(CLI::Range(1, 1 << 24));
    benchCmd->add_option("--seed", bench.seed, "rng seed");
    benchCmd->add_flag("--parallel", bench.parallel, "run benchmark cells concurrently");
    benchCmd->add_option("--out", bench.out, "benchmark CSV path");

    TraceOptions trace;
    CLI::App* traceCmd = app.add_subcommand("trace", "long-run convergence trace");
    traceCmd->add_option("--data", trace.data, "training dataset")->required();
    traceCmd->add_option("--rank", trace.rank, "factor rank")->check(CLI::PositiveNumber);
    traceCmd->add_option("--mu1", trace.mu1, "l1 weight on U")->check(CLI::NonNegativeNumber);
    traceCmd->add_option("--mu2", trace.mu2, "l2 weight on U")->check(CLI::NonNegativeNumber);
    traceCmd->add_option("--nu1", trace.nu1, "l1 weight on V")->check(CLI::NonNegativeNumber);
    traceCmd->add_option("--nu2", trace.nu2, "l2 weight on V")->check(CLI::NonNegativeNumber);
    traceCmd->add_option("--long-run-iters", trace.longRunIters, "iterations for the reference run")
        ->check(CLI::Range(1, 1 << 24));
    traceCmd->add_option("--out", trace.out, "trace CSV path")->required();

    GridSearchOptions grid;
    CLI::App* gridCmd = app.add_subcommand("gridsearch", "cross-validated regularization sweep");
    gridCmd->add_option("--data", grid.data, "training dataset")->required();
    gridCmd->add_option("--grid", grid.grid, "CSV of mu1,mu2,nu1,nu2 tuples")->required();
    gridCmd->add_option("--folds", grid.folds, "cross-validation folds")
        ->check(CLI::Range(2, 1 << 24));
    gridCmd->add_option("--rank", grid.rank, "factor rank")->check(CLI::PositiveNumber);
    gridCmd->add_option("--tol", grid.tol, "stopping tolerance")->check(CLI::PositiveNumber);
    gridCmd->add_option("--max-iter", grid.maxIter, "iteration cap")
        ->check(CLI::Range(1, 1 << 24));
    gridCmd->add_option("--seed", grid.seed, "rng seed for the fold shuffle");
    gridCmd->add_option("--out", grid.out, "results CSV path")->required();

    ImportCsvOptions importCsv;
    CLI::App* importCmd = app.add_subcommand("import-csv", "convert CSV to the binary format");
    importCmd->add_option("--in", importCsv.in, "input CSV path")->required();
    importCmd->add_option("--s", importCsv.s, "sample rows")->check(CLI::PositiveNumber)
        ->required();
    importCmd->add_option("--t", importCsv.t, "sample columns")->check(CLI::PositiveNumber)
        ->required();
    importCmd->add_flag("--class-labels", importCsv.classLabels,
                        "accept arbitrary nonzero integer labels instead of -1/+1");
    importCmd->add_option("--out", importCsv.out, "output dataset path")->required();

    ExportCsvOptions exportCsv;
    CLI::App* exportCmd = app.add_subcommand("export-csv", "convert the binary format to CSV");
    exportCmd->add_option("--in", exportCsv.in, "input dataset path")->required();
    exportCmd->add_option("--out", exportCsv.out, "output CSV path")->required();

    int exitCode = 0;
    genCmd->callback([&] { exitCode = cmd_gen(gen); });
    trainCmd->callback([&] { exitCode = cmd_train(train); });
    predictCmd->callback([&] { exitCode = cmd_predict(predict); });
    benchCmd->callback([&] { exitCode = cmd_bench(bench); });
    traceCmd->callback([&] { exitCode = cmd_trace(trace); });
    gridCmd->callback([&] { exitCode = cmd_gridsearch(grid); });
    importCmd->callback([&] { exitCode = cmd_import_csv(importCsv); });
    exportCmd->callback([&] { exitCode = cmd_export_csv(exportCsv); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exitCode;
}
