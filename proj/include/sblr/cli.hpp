#pragma once

#include <future>
#include <iostream>
#include <set>

#include "sblr/data_io.hpp"
#include "sblr/metrics.hpp"
#include "sblr/multiclass.hpp"
#include "sblr/solver_bcd.hpp"

namespace sblr::cli {

/* Exit code for fits that hit the iteration cap before the tolerance. */
constexpr int kExitMaxIter = 2;

struct GenOptions
{
    int n = 100;
    int s = 50;
    int t = 50;
    double shift = 1.0;
    std::uint64_t seed = 0;
    std::string out;
};

inline int cmd_gen(const GenOptions& opt, std::ostream& log = std::cout)
{
    const Dataset data = generate_synthetic(opt.n, opt.s, opt.t, opt.shift, RngSpec{opt.seed});
    write_dataset(opt.out, data);
    log << "wrote " << opt.out << ": n=" << opt.n << " s=" << opt.s << " t=" << opt.t
        << " shift=" << opt.shift << " seed=" << opt.seed << "\n";
    return 0;
}

struct TrainOptions
{
    std::string data;
    std::string solver = "bcpd";   // bcpd | bcd | linear | sparse-linear | ova | multinomial
    int rank = 1;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double nu1 = 0.0;
    double nu2 = 0.0;
    double lambda = 0.0;           // sparse-linear only
    double tol = 1e-3;
    int maxIter = 500;
    double innerTol = 1e-6;        // bcd only
    int innerMaxIter = 1000;       // bcd only
    std::uint64_t seed = 0;        // reserved; every solver here is deterministic anyway
    std::string modelOut;
    std::string traceOut;
};

namespace detail_cli {

inline SolverConfig solver_config(const TrainOptions& opt)
{
    SolverConfig config;
    config.reg = RegConfig{opt.mu1, opt.mu2, opt.nu1, opt.nu2, opt.rank};
    config.maxIter = opt.maxIter;
    config.tol = opt.tol;
    return config;
}

inline void write_trace_rows(const std::string& path, const std::vector<IterationRecord>& rows)
{
    FitReport shim;
    shim.trace = rows;
    write_trace_csv(path, shim);
}

inline int exit_code_for(TerminationReason reason, const std::vector<IterationRecord>& trace,
                         double tol)
{
    switch (reason) {
        case TerminationReason::ToleranceReached:
            return 0;
        case TerminationReason::MaxIter:
            return kExitMaxIter;
        case TerminationReason::DegenerateInput:
            // the run still completed; grade it by where it stopped
            return !trace.empty() && trace.back().relErr <= tol ? 0 : kExitMaxIter;
    }
    return kExitMaxIter;
}

}  // namespace detail_cli

inline int cmd_train(const TrainOptions& opt, std::ostream& log = std::cout)
{
    const Dataset data = read_dataset(opt.data);
    SavedModel model;
    model.s = data.rows();
    model.t = data.cols();

    int exitCode = 0;
    if (opt.solver == "bcpd" || opt.solver == "bcd") {
        FitReport report;
        if (opt.solver == "bcpd") {
            report = fit(data, detail_cli::solver_config(opt));
        } else {
            BcdConfig config{detail_cli::solver_config(opt),
                             InnerSolverConfig{opt.innerTol, opt.innerMaxIter, true}};
            report = fit_bcd(data, config);
        }
        model.kind = ModelKind::Bilinear;
        model.bilinear = report.params;
        if (!opt.traceOut.empty()) {
            write_trace_csv(opt.traceOut, report);
        }
        log << opt.solver << ": " << to_string(report.terminationReason) << " after "
            << report.totalIters << " iterations, objective "
            << report.trace.back().objective << "\n";
        exitCode = detail_cli::exit_code_for(report.terminationReason, report.trace, opt.tol);
    } else if (opt.solver == "linear" || opt.solver == "sparse-linear") {
        const double lambda = opt.solver == "linear" ? 0.0 : opt.lambda;
        if (!opt.traceOut.empty()) {
            throw std::invalid_argument("cmd_train: --trace-out is not supported for " +
                                        opt.solver);
        }
        model.kind = ModelKind::Linear;
        model.linear = fit_linear(data, lambda);
        log << opt.solver << ": done, lambda=" << lambda << "\n";
    } else if (opt.solver == "ova") {
        if (!opt.traceOut.empty()) {
            throw std::invalid_argument("cmd_train: --trace-out is not supported for ova");
        }
        OneVsAllReport report = fit_one_vs_all(data, detail_cli::solver_config(opt));
        model.kind = ModelKind::OneVsAll;
        model.multiclass = std::move(report.model);
        log << "ova: trained " << model.multiclass.classes.size() << " binary models\n";
    } else if (opt.solver == "multinomial") {
        MulticlassFitReport report = fit_multinomial(data, detail_cli::solver_config(opt));
        model.kind = ModelKind::Multinomial;
        model.multiclass = std::move(report.model);
        if (!opt.traceOut.empty()) {
            detail_cli::write_trace_rows(opt.traceOut, report.trace);
        }
        log << "multinomial: " << to_string(report.terminationReason) << " after "
            << report.totalIters << " iterations, objective "
            << report.trace.back().objective << "\n";
        exitCode = detail_cli::exit_code_for(report.terminationReason, report.trace, opt.tol);
    } else {
        throw std::invalid_argument("cmd_train: unknown solver '" + opt.solver + "'");
    }

    if (!opt.modelOut.empty()) {
        write_model(opt.modelOut, model);
        log << "model written to " << opt.modelOut << "\n";
    }
    return exitCode;
}

struct PredictOptions
{
    std::string model;
    std::string data;
    std::string out;
};

inline int cmd_predict(const PredictOptions& opt, std::ostream& log = std::cout)
{
    const SavedModel model = read_model(opt.model);
    const Dataset data = read_dataset(opt.data);
    if (data.rows() != model.s || data.cols() != model.t) {
        throw std::invalid_argument("cmd_predict: dataset shape does not match model");
    }

    std::ofstream out(opt.out);
    if (!out) {
        throw std::runtime_error("cmd_predict: cannot open " + opt.out);
    }
    out << std::setprecision(17);
    out << "index,margin,probability,label\n";

    std::set<int> domain;
    std::vector<int> predicted;
    predicted.reserve(data.n());
    for (int i = 0; i < data.n(); ++i) {
        double m = 0.0;
        double prob = 0.0;
        int label = 0;
        switch (model.kind) {
            case ModelKind::Bilinear: {
                m = margin(model.bilinear, data.samples[i]);
                prob = sigmoid(m);
                label = m >= 0.0 ? 1 : -1;
                break;
            }
            case ModelKind::Linear: {
                m = linear_margin(model.linear, data.samples[i]);
                prob = sigmoid(m);
                label = m >= 0.0 ? 1 : -1;
                break;
            }
            case ModelKind::OneVsAll:
            case ModelKind::Multinomial: {
                const MulticlassPrediction p = predict_multiclass(model.multiclass,
                                                                  data.samples[i]);
                m = p.score;
                prob = p.probability;
                label = p.label;
                break;
            }
        }
        predicted.push_back(label);
        out << i << ',' << m << ',' << prob << ',' << label << '\n';
    }
    if (!out) {
        throw std::runtime_error("cmd_predict: write failed for " + opt.out);
    }

    if (model.kind == ModelKind::Bilinear || model.kind == ModelKind::Linear) {
        domain = {-1, 1};
    } else {
        domain.insert(model.multiclass.classes.begin(), model.multiclass.classes.end());
    }
    const bool labeled = std::all_of(data.labels.begin(), data.labels.end(),
                                     [&domain](int l) { return domain.count(l) > 0; });
    if (labeled) {
        log << "accuracy=" << accuracy(data.labels, predicted) << "\n";
    }
    log << "predictions written to " << opt.out << "\n";
    return 0;
}

struct BenchOptions
{
    std::vector<int> sizes = {50, 100, 250};
    int sizeCap = 250;
    int n = 100;
    int reps = 3;
    int rank = 1;
    std::string config = "ridge-dominated";   // or l1-dominated
    std::string solvers = "both";             // both | bcpd | bcd
    double tol = 1e-3;
    int maxIter = 500;
    std::uint64_t seed = 0;
    bool parallel = false;
    std::string out;
};

struct BenchRow
{
    std::string solver;
    int s = 0;
    int t = 0;
    int n = 0;
    double seconds = 0.0;
    int iters = 0;
    double objective = 0.0;
    std::string config;
};

namespace detail_cli {

inline RegConfig bench_reg(const std::string& configId, int rank)
{
    if (configId == "ridge-dominated") {
        return RegConfig{0.1, 1.0, 0.1, 1.0, rank};
    }
    if (configId == "l1-dominated") {
        return RegConfig{0.1, 0.0, 0.1, 0.0, rank};
    }
    throw std::invalid_argument("cmd_bench: unknown config '" + configId + "'");
}

}  // namespace detail_cli

inline int cmd_bench(const BenchOptions& opt, std::ostream& log = std::cout)
{
    if (opt.reps < 1) {
        throw std::invalid_argument("cmd_bench: reps must be >= 1");
    }
    if (opt.sizes.empty()) {
        throw std::invalid_argument("cmd_bench: no sizes given");
    }
    for (int size : opt.sizes) {
        if (size < 1 || size > opt.sizeCap) {
            throw std::invalid_argument("cmd_bench: size " + std::to_string(size) +
                                        " outside cap " + std::to_string(opt.sizeCap));
        }
    }
    const bool runBcpd = opt.solvers == "both" || opt.solvers == "bcpd";
    const bool runBcd = opt.solvers == "both" || opt.solvers == "bcd";
    if (!runBcpd && !runBcd) {
        throw std::invalid_argument("cmd_bench: solvers must be both, bcpd or bcd");
    }

    SolverConfig solverConfig;
    solverConfig.reg = detail_cli::bench_reg(opt.config, opt.rank);
    solverConfig.tol = opt.tol;
    solverConfig.maxIter = opt.maxIter;

    const auto runCell = [&](int size, int rep) {
        // deterministic per-rep stream, disjoint across sizes
        const std::uint64_t cellSeed =
            opt.seed + 1000003ull * static_cast<std::uint64_t>(size) +
            static_cast<std::uint64_t>(rep);
        const Dataset data = generate_synthetic(opt.n, size, size, 1.0, RngSpec{cellSeed});
        std::vector<BenchRow> rows;
        if (runBcpd) {
            const FitReport report = fit(data, solverConfig);
            rows.push_back({"bcpd", size, size, opt.n, report.totalSeconds,
                            report.totalIters, report.trace.back().objective, opt.config});
        }
        if (runBcd) {
            const FitReport report = fit_bcd(data, BcdConfig{solverConfig, {}});
            rows.push_back({"bcd", size, size, opt.n, report.totalSeconds,
                            report.totalIters, report.trace.back().objective, opt.config});
        }
        return rows;
    };

    std::vector<std::vector<BenchRow>> cells(opt.sizes.size() * opt.reps);
    if (opt.parallel) {
        std::vector<std::future<std::vector<BenchRow>>> futures;
        for (std::size_t si = 0; si < opt.sizes.size(); ++si) {
            for (int rep = 0; rep < opt.reps; ++rep) {
                futures.push_back(std::async(std::launch::async, runCell, opt.sizes[si], rep));
            }
        }
        for (std::size_t i = 0; i < futures.size(); ++i) {
            cells[i] = futures[i].get();
        }
    } else {
        std::size_t at = 0;
        for (std::size_t si = 0; si < opt.sizes.size(); ++si) {
            for (int rep = 0; rep < opt.reps; ++rep) {
                cells[at++] = runCell(opt.sizes[si], rep);
            }
        }
    }

    std::vector<BenchRow> rows;
    for (const auto& cell : cells) {
        rows.insert(rows.end(), cell.begin(), cell.end());
    }

    if (!opt.out.empty()) {
        std::ofstream out(opt.out);
        if (!out) {
            throw std::runtime_error("cmd_bench: cannot open " + opt.out);
        }
        out << std::setprecision(17);
        out << "solver,s,t,n,seconds,iters,objective,config\n";
        for (const BenchRow& row : rows) {
            out << row.solver << ',' << row.s << ',' << row.t << ',' << row.n << ','
                << row.seconds << ',' << row.iters << ',' << row.objective << ','
                << row.config << '\n';
        }
        if (!out) {
            throw std::runtime_error("cmd_bench: write failed for " + opt.out);
        }
    }

    // Table-style aggregate: mean wall-clock and median iteration count
    for (int size : opt.sizes) {
        for (const char* solver : {"bcpd", "bcd"}) {
            std::vector<double> seconds;
            std::vector<int> iters;
            for (const BenchRow& row : rows) {
                if (row.s == size && row.solver == solver) {
                    seconds.push_back(row.seconds);
                    iters.push_back(row.iters);
                }
            }
            if (seconds.empty()) {
                continue;
            }
            double meanSeconds = 0.0;
            for (double v : seconds) meanSeconds += v;
            meanSeconds /= seconds.size();
            std::sort(iters.begin(), iters.end());
            const std::size_t half = iters.size() / 2;
            const double medianIters = iters.size() % 2 == 1
                                           ? iters[half]
                                           : 0.5 * (iters[half - 1] + iters[half]);
            log << "aggregate config=" << opt.config << " s=" << size << " solver=" << solver
                << " mean_seconds=" << meanSeconds << " median_iters=" << medianIters << "\n";
        }
    }
    return 0;
}

struct TraceOptions
{
    std::string data;
    int rank = 1;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double nu1 = 0.0;
    double nu2 = 0.0;
    int longRunIters = 400;
    std::string out;
};

/**
 * Runs the prox-descent solver for longRunIters sweeps (no early stop
 * short of an exact fixed point), takes the final iterate as the
 * reference, and reports per-iteration distances to it alongside the
 * objective and relative error.
 */
inline int cmd_trace(const TraceOptions& opt, std::ostream& log = std::cout)
{
    if (opt.longRunIters < 1) {
        throw std::invalid_argument("cmd_trace: long-run-iters must be >= 1");
    }
    const Dataset data = read_dataset(opt.data);

    SolverConfig config;
    config.reg = RegConfig{opt.mu1, opt.mu2, opt.nu1, opt.nu2, opt.rank};
    config.maxIter = opt.longRunIters;
    config.tol = std::numeric_limits<double>::min();

    std::vector<ModelParams> iterates;
    const FitReport report = fit(data, config, [&iterates](const IterationSnapshot& snap) {
        if (iterates.empty()) {
            iterates.push_back(snap.prev);
        }
        iterates.push_back(snap.curr);
    });
    if (iterates.empty()) {
        iterates.push_back(report.params);
    }
    const ModelParams& reference = report.params;

    std::ofstream out(opt.out);
    if (!out) {
        throw std::runtime_error("cmd_trace: cannot open " + opt.out);
    }
    out << std::setprecision(17);
    out << "k,F,q,residual\n";
    for (std::size_t k = 0; k < report.trace.size(); ++k) {
        const IterationRecord& rec = report.trace[k];
        out << rec.k << ',' << rec.objective << ',' << rec.relErr << ','
            << stacked_distance(iterates[k], reference) << '\n';
    }
    if (!out) {
        throw std::runtime_error("cmd_trace: write failed for " + opt.out);
    }
    log << "trace written to " << opt.out << " (" << report.totalIters << " iterations, final F "
        << report.trace.back().objective << ")\n";
    return 0;
}

struct GridSearchOptions
{
    std::string data;
    std::string grid;
    int folds = 5;
    int rank = 1;
    double tol = 1e-3;
    int maxIter = 500;
    std::uint64_t seed = 0;
    std::string out;
};

inline int cmd_gridsearch(const GridSearchOptions& opt, std::ostream& log = std::cout)
{
    const Dataset data = read_dataset(opt.data);
    require_binary_labels(data);

    std::ifstream gridFile(opt.grid);
    if (!gridFile) {
        throw std::runtime_error("cmd_gridsearch: cannot open " + opt.grid);
    }
    std::vector<RegConfig> tuples;
    std::string line;
    int lineNo = 0;
    while (std::getline(gridFile, line)) {
        ++lineNo;
        if (line.empty()) {
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 4) {
            throw std::runtime_error("cmd_gridsearch: line " + std::to_string(lineNo) +
                                     ": expected mu1,mu2,nu1,nu2");
        }
        RegConfig reg;
        reg.mu1 = detail::parse_double(fields[0], lineNo, "mu1");
        reg.mu2 = detail::parse_double(fields[1], lineNo, "mu2");
        reg.nu1 = detail::parse_double(fields[2], lineNo, "nu1");
        reg.nu2 = detail::parse_double(fields[3], lineNo, "nu2");
        reg.rank = opt.rank;
        validate_reg(reg);
        tuples.push_back(reg);
    }
    if (tuples.empty()) {
        throw std::runtime_error("cmd_gridsearch: empty grid file " + opt.grid);
    }

    const auto folds = kfold_split(data.n(), opt.folds, RngSpec{opt.seed});
    std::vector<double> meanAccuracy(tuples.size(), 0.0);
    for (std::size_t g = 0; g < tuples.size(); ++g) {
        double sum = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<int> trainIdx;
            for (std::size_t other = 0; other < folds.size(); ++other) {
                if (other != f) {
                    trainIdx.insert(trainIdx.end(), folds[other].begin(), folds[other].end());
                }
            }
            SolverConfig config;
            config.reg = tuples[g];
            config.tol = opt.tol;
            config.maxIter = opt.maxIter;
            const FitReport report = fit(subset(data, trainIdx), config);

            const Dataset held = subset(data, folds[f]);
            std::vector<int> predicted;
            predicted.reserve(held.n());
            for (const Matrix& x : held.samples) {
                predicted.push_back(predict(report.params, x).label);
            }
            sum += accuracy(held.labels, predicted);
        }
        meanAccuracy[g] = sum / folds.size();
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < tuples.size(); ++g) {
        if (meanAccuracy[g] > meanAccuracy[best]) {
            best = g;
        }
    }

    std::ofstream out(opt.out);
    if (!out) {
        throw std::runtime_error("cmd_gridsearch: cannot open " + opt.out);
    }
    out << std::setprecision(17);
    out << "mu1,mu2,nu1,nu2,mean_accuracy,best\n";
    for (std::size_t g = 0; g < tuples.size(); ++g) {
        out << tuples[g].mu1 << ',' << tuples[g].mu2 << ',' << tuples[g].nu1 << ','
            << tuples[g].nu2 << ',' << meanAccuracy[g] << ',' << (g == best ? 1 : 0) << '\n';
    }
    if (!out) {
        throw std::runtime_error("cmd_gridsearch: write failed for " + opt.out);
    }
    log << "best tuple: mu1=" << tuples[best].mu1 << " mu2=" << tuples[best].mu2
        << " nu1=" << tuples[best].nu1 << " nu2=" << tuples[best].nu2
        << " mean_accuracy=" << meanAccuracy[best] << "\n";
    return 0;
}

struct ImportCsvOptions
{
    std::string in;
    int s = 0;
    int t = 0;
    bool classLabels = false;
    std::string out;
};

inline int cmd_import_csv(const ImportCsvOptions& opt, std::ostream& log = std::cout)
{
    const Dataset data = import_csv(opt.in, opt.s, opt.t, !opt.classLabels);
    write_dataset(opt.out, data);
    log << "imported " << data.n() << " samples to " << opt.out << "\n";
    return 0;
}

struct ExportCsvOptions
{
    std::string in;
    std::string out;
};

inline int cmd_export_csv(const ExportCsvOptions& opt, std::ostream& log = std::cout)
{
    const Dataset data = read_dataset(opt.in);
    export_csv(opt.out, data);
    log << "exported " << data.n() << " samples to " << opt.out << "\n";
    return 0;
}

}  // namespace sblr::cli
