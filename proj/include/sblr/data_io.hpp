#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sblr/linear.hpp"
#include "sblr/rng.hpp"
#include "sblr/solver_bcpd.hpp"

namespace sblr {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts are unsupported");

/**
 * Two-class Gaussian data: the first n/2 samples have i.i.d. standard
 * normal entries plus `shift` and label +1, the rest get -shift and
 * label -1. Entries are drawn row-major from a single Box-Muller stream,
 * so a seed fully determines the dataset.
 */
inline Dataset generate_synthetic(int n, int s, int t, double shift, const RngSpec& rng)
{
    if (n < 2 || n % 2 != 0) {
        throw std::invalid_argument("generate_synthetic: n must be even and >= 2");
    }
    if (s < 1 || t < 1) {
        throw std::invalid_argument("generate_synthetic: dimensions must be >= 1");
    }
    if (!std::isfinite(shift)) {
        throw std::invalid_argument("generate_synthetic: shift must be finite");
    }
    NormalGenerator gen(rng);
    Dataset data;
    data.samples.reserve(n);
    data.labels.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double offset = i < n / 2 ? shift : -shift;
        Matrix x(s, t);
        for (int j = 0; j < s; ++j) {
            for (int k = 0; k < t; ++k) {
                x(j, k) = gen.normal() + offset;
            }
        }
        data.samples.push_back(std::move(x));
        data.labels.push_back(i < n / 2 ? 1 : -1);
    }
    return data;
}

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void put_f64(std::ostream& out, double v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t get_u32(std::istream& in, const char* what)
{
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw std::runtime_error(std::string("read: truncated ") + what);
    }
    return v;
}

inline double get_f64(std::istream& in, const char* what)
{
    double v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw std::runtime_error(std::string("read: truncated ") + what);
    }
    return v;
}

inline void put_matrix_rowmajor(std::ostream& out, const Matrix& m)
{
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            put_f64(out, m(j, k));
        }
    }
}

inline Matrix get_matrix_rowmajor(std::istream& in, int rows, int cols, const char* what)
{
    Matrix m(rows, cols);
    for (int j = 0; j < rows; ++j) {
        for (int k = 0; k < cols; ++k) {
            m(j, k) = get_f64(in, what);
        }
    }
    if (!m.allFinite()) {
        throw std::runtime_error(std::string("read: non-finite values in ") + what);
    }
    return m;
}

}  // namespace detail

/**
 * SBLR1 container: magic "SBLR", u32 version (=1), u32 n, u32 s, u32 t,
 * u8 label width (=1), then n signed label bytes (nonzero; -1/+1 for
 * binary data, small positive ids for multi-class), then n*s*t doubles,
 * sample-major and row-major within a sample. Little-endian throughout.
 */
inline void write_dataset(const std::string& path, const Dataset& data)
{
    validate_dataset(data);
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        if (data.labels[i] < -128 || data.labels[i] > 127) {
            throw std::invalid_argument("write_dataset: label " + std::to_string(i) +
                                        " does not fit in one byte");
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_dataset: cannot open " + path);
    }
    out.write("SBLR", 4);
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(data.n()));
    detail::put_u32(out, static_cast<std::uint32_t>(data.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(data.cols()));
    const char labelWidth = 1;
    out.write(&labelWidth, 1);
    for (int label : data.labels) {
        const char byte = static_cast<char>(label);
        out.write(&byte, 1);
    }
    for (const Matrix& x : data.samples) {
        detail::put_matrix_rowmajor(out, x);
    }
    if (!out) {
        throw std::runtime_error("write_dataset: write failed for " + path);
    }
}

inline Dataset read_dataset(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_dataset: cannot open " + path);
    }
    in.seekg(0, std::ios::end);
    const std::uint64_t fileSize = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0, std::ios::beg);

    char magic[4] = {};
    if (!in.read(magic, 4) || std::string(magic, 4) != "SBLR") {
        throw std::runtime_error("read_dataset: bad magic in " + path);
    }
    const std::uint32_t version = detail::get_u32(in, "version");
    if (version != 1) {
        throw std::runtime_error("read_dataset: unsupported version " +
                                 std::to_string(version));
    }
    const std::uint32_t n = detail::get_u32(in, "n");
    const std::uint32_t s = detail::get_u32(in, "s");
    const std::uint32_t t = detail::get_u32(in, "t");
    char labelWidth = 0;
    if (!in.read(&labelWidth, 1) || labelWidth != 1) {
        throw std::runtime_error("read_dataset: unsupported label width");
    }
    if (n == 0 || s == 0 || t == 0) {
        throw std::runtime_error("read_dataset: empty dimensions");
    }
    const std::uint64_t expected = 21ull + n + 8ull * n * s * t;
    if (fileSize != expected) {
        throw std::runtime_error("read_dataset: file length " + std::to_string(fileSize) +
                                 " does not match header (expected " +
                                 std::to_string(expected) + ")");
    }

    Dataset data;
    data.labels.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        char byte = 0;
        in.read(&byte, 1);
        const int label = static_cast<signed char>(byte);
        if (label == 0) {
            throw std::runtime_error("read_dataset: invalid zero label at index " +
                                     std::to_string(i));
        }
        data.labels.push_back(label);
    }
    data.samples.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        data.samples.push_back(detail::get_matrix_rowmajor(in, s, t, "sample"));
    }
    return data;
}

/* One line per sample: label, then the s*t entries row-major. */
inline void export_csv(const std::string& path, const Dataset& data)
{
    validate_dataset(data);
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("export_csv: cannot open " + path);
    }
    out << std::setprecision(17);
    for (int i = 0; i < data.n(); ++i) {
        out << data.labels[i];
        const Matrix& x = data.samples[i];
        for (Eigen::Index j = 0; j < x.rows(); ++j) {
            for (Eigen::Index k = 0; k < x.cols(); ++k) {
                out << ',' << x(j, k);
            }
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("export_csv: write failed for " + path);
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.push_back("");
    }
    return fields;
}

inline double parse_double(const std::string& field, int lineNo, const char* what)
{
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("import_csv: line " + std::to_string(lineNo) + ": bad " +
                                 what + " '" + field + "'");
    }
    while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) {
        ++pos;
    }
    if (pos != field.size()) {
        throw std::runtime_error("import_csv: line " + std::to_string(lineNo) + ": bad " +
                                 what + " '" + field + "'");
    }
    return v;
}

}  // namespace detail

/**
 * Parse the CSV schema written by export_csv. Labels must be nonzero
 * integers; with requireBinary they must be -1/+1. Errors carry 1-based
 * line numbers. Sample dimensions cannot be recovered from a flat row,
 * so s and t are taken as arguments.
 */
inline Dataset import_csv(const std::string& path, int s, int t, bool requireBinary = true)
{
    if (s < 1 || t < 1) {
        throw std::invalid_argument("import_csv: dimensions must be >= 1");
    }
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("import_csv: cannot open " + path);
    }
    Dataset data;
    std::string line;
    int lineNo = 0;
    const std::size_t want = 1 + static_cast<std::size_t>(s) * t;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) {
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != want) {
            throw std::runtime_error("import_csv: line " + std::to_string(lineNo) + ": got " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(want));
        }
        const double rawLabel = detail::parse_double(fields[0], lineNo, "label");
        const int label = static_cast<int>(rawLabel);
        if (static_cast<double>(label) != rawLabel || label == 0) {
            throw std::runtime_error("import_csv: line " + std::to_string(lineNo) +
                                     ": label must be a nonzero integer");
        }
        if (requireBinary && label != 1 && label != -1) {
            throw std::runtime_error("import_csv: line " + std::to_string(lineNo) +
                                     ": label must be -1 or +1");
        }
        Matrix x(s, t);
        std::size_t f = 1;
        for (int j = 0; j < s; ++j) {
            for (int k = 0; k < t; ++k) {
                x(j, k) = detail::parse_double(fields[f++], lineNo, "value");
            }
        }
        if (!x.allFinite()) {
            throw std::runtime_error("import_csv: line " + std::to_string(lineNo) +
                                     ": non-finite value");
        }
        data.samples.push_back(std::move(x));
        data.labels.push_back(label);
    }
    if (data.samples.empty()) {
        throw std::runtime_error("import_csv: no data rows in " + path);
    }
    return data;
}

/**
 * Deterministic k-fold assignment: Fisher-Yates shuffle of 0..n-1 driven
 * by the seeded generator, then contiguous chunks whose sizes differ by
 * at most one (earlier folds get the extra element).
 */
inline std::vector<std::vector<int>> kfold_split(int n, int k, const RngSpec& rng)
{
    if (k < 2 || k > n) {
        throw std::invalid_argument("kfold_split: need 2 <= k <= n");
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        order[i] = i;
    }
    NormalGenerator gen(rng);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(gen.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<std::vector<int>> folds(k);
    const int base = n / k;
    const int extra = n % k;
    int at = 0;
    for (int f = 0; f < k; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        folds[f].assign(order.begin() + at, order.begin() + at + size);
        at += size;
    }
    return folds;
}

inline Dataset subset(const Dataset& data, const std::vector<int>& indices)
{
    Dataset out;
    for (int idx : indices) {
        if (idx < 0 || idx >= data.n()) {
            throw std::invalid_argument("subset: index out of range");
        }
        out.samples.push_back(data.samples[idx]);
        out.labels.push_back(data.labels[idx]);
    }
    return out;
}

/* Solver trace in CSV form; one row per iteration record. */
inline void write_trace_csv(const std::string& path, const FitReport& report)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_trace_csv: cannot open " + path);
    }
    out << std::setprecision(17);
    out << "k,F,q,L_u,L_v,seconds\n";
    for (const IterationRecord& rec : report.trace) {
        out << rec.k << ',' << rec.objective << ',' << rec.relErr << ',' << rec.lU << ','
            << rec.lV << ',' << rec.wallClock << '\n';
    }
    if (!out) {
        throw std::runtime_error("write_trace_csv: write failed for " + path);
    }
}

enum class ModelKind : std::uint8_t
{
    Bilinear = 0,
    Linear = 1,
    OneVsAll = 2,
    Multinomial = 3
};

/* Tagged union of everything cmd_train can produce. */
struct SavedModel
{
    ModelKind kind = ModelKind::Bilinear;
    int s = 0;
    int t = 0;
    ModelParams bilinear;
    LinearModel linear;
    MulticlassModel multiclass;
};

/**
 * SBLM1 model container, mirroring the SBLR1 conventions: magic "SBLM",
 * u32 version (=1), u8 kind, then dims and payload. Bilinear: u32 s,t,r,
 * f64 b, U then V row-major. Linear: u32 s,t, f64 b, then s*t weights in
 * vectorize() order. Multi-class: u32 s,t,r, u32 class count, i32 class
 * ids, u32 block count, then per block f64 b, U, V row-major.
 */
inline void write_model(const std::string& path, const SavedModel& model)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_model: cannot open " + path);
    }
    out.write("SBLM", 4);
    detail::put_u32(out, 1);
    const std::uint8_t kind = static_cast<std::uint8_t>(model.kind);
    out.write(reinterpret_cast<const char*>(&kind), 1);
    switch (model.kind) {
        case ModelKind::Bilinear: {
            validate_params(model.bilinear);
            detail::put_u32(out, static_cast<std::uint32_t>(model.bilinear.U.rows()));
            detail::put_u32(out, static_cast<std::uint32_t>(model.bilinear.V.rows()));
            detail::put_u32(out, static_cast<std::uint32_t>(model.bilinear.rank()));
            detail::put_f64(out, model.bilinear.b);
            detail::put_matrix_rowmajor(out, model.bilinear.U);
            detail::put_matrix_rowmajor(out, model.bilinear.V);
            break;
        }
        case ModelKind::Linear: {
            if (!model.linear.w.allFinite() || !std::isfinite(model.linear.b)) {
                throw std::invalid_argument("write_model: non-finite linear model");
            }
            if (model.linear.w.size() != static_cast<Eigen::Index>(model.s) * model.t) {
                throw std::invalid_argument("write_model: linear weight size mismatch");
            }
            detail::put_u32(out, static_cast<std::uint32_t>(model.s));
            detail::put_u32(out, static_cast<std::uint32_t>(model.t));
            detail::put_f64(out, model.linear.b);
            for (Eigen::Index j = 0; j < model.linear.w.size(); ++j) {
                detail::put_f64(out, model.linear.w(j));
            }
            break;
        }
        case ModelKind::OneVsAll:
        case ModelKind::Multinomial: {
            validate_multiclass_model(model.multiclass);
            const ModelParams& first = model.multiclass.perClassParams.front();
            detail::put_u32(out, static_cast<std::uint32_t>(first.U.rows()));
            detail::put_u32(out, static_cast<std::uint32_t>(first.V.rows()));
            detail::put_u32(out, static_cast<std::uint32_t>(first.rank()));
            detail::put_u32(out,
                            static_cast<std::uint32_t>(model.multiclass.classes.size()));
            for (int c : model.multiclass.classes) {
                const std::int32_t v = c;
                out.write(reinterpret_cast<const char*>(&v), sizeof v);
            }
            detail::put_u32(
                out, static_cast<std::uint32_t>(model.multiclass.perClassParams.size()));
            for (const ModelParams& p : model.multiclass.perClassParams) {
                detail::put_f64(out, p.b);
                detail::put_matrix_rowmajor(out, p.U);
                detail::put_matrix_rowmajor(out, p.V);
            }
            break;
        }
    }
    if (!out) {
        throw std::runtime_error("write_model: write failed for " + path);
    }
}

inline SavedModel read_model(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_model: cannot open " + path);
    }
    char magic[4] = {};
    if (!in.read(magic, 4) || std::string(magic, 4) != "SBLM") {
        throw std::runtime_error("read_model: bad magic in " + path);
    }
    const std::uint32_t version = detail::get_u32(in, "version");
    if (version != 1) {
        throw std::runtime_error("read_model: unsupported version " + std::to_string(version));
    }
    std::uint8_t kindByte = 0;
    if (!in.read(reinterpret_cast<char*>(&kindByte), 1) || kindByte > 3) {
        throw std::runtime_error("read_model: bad model kind");
    }
    SavedModel model;
    model.kind = static_cast<ModelKind>(kindByte);
    switch (model.kind) {
        case ModelKind::Bilinear: {
            const int s = static_cast<int>(detail::get_u32(in, "s"));
            const int t = static_cast<int>(detail::get_u32(in, "t"));
            const int r = static_cast<int>(detail::get_u32(in, "r"));
            const double b = detail::get_f64(in, "b");
            Matrix u = detail::get_matrix_rowmajor(in, s, r, "U");
            Matrix v = detail::get_matrix_rowmajor(in, t, r, "V");
            model.s = s;
            model.t = t;
            model.bilinear = make_model_params(std::move(u), std::move(v), b);
            break;
        }
        case ModelKind::Linear: {
            model.s = static_cast<int>(detail::get_u32(in, "s"));
            model.t = static_cast<int>(detail::get_u32(in, "t"));
            model.linear.b = detail::get_f64(in, "b");
            const Eigen::Index p = static_cast<Eigen::Index>(model.s) * model.t;
            model.linear.w.resize(p);
            for (Eigen::Index j = 0; j < p; ++j) {
                model.linear.w(j) = detail::get_f64(in, "w");
            }
            if (!model.linear.w.allFinite() || !std::isfinite(model.linear.b)) {
                throw std::runtime_error("read_model: non-finite linear model");
            }
            break;
        }
        case ModelKind::OneVsAll:
        case ModelKind::Multinomial: {
            const int s = static_cast<int>(detail::get_u32(in, "s"));
            const int t = static_cast<int>(detail::get_u32(in, "t"));
            const int r = static_cast<int>(detail::get_u32(in, "r"));
            const std::uint32_t numClasses = detail::get_u32(in, "class count");
            for (std::uint32_t c = 0; c < numClasses; ++c) {
                std::int32_t v = 0;
                if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
                    throw std::runtime_error("read_model: truncated class ids");
                }
                model.multiclass.classes.push_back(v);
            }
            const std::uint32_t numBlocks = detail::get_u32(in, "block count");
            for (std::uint32_t c = 0; c < numBlocks; ++c) {
                const double b = detail::get_f64(in, "b");
                Matrix u = detail::get_matrix_rowmajor(in, s, r, "U");
                Matrix v = detail::get_matrix_rowmajor(in, t, r, "V");
                model.multiclass.perClassParams.push_back(
                    make_model_params(std::move(u), std::move(v), b));
            }
            model.s = s;
            model.t = t;
            model.multiclass.mode = model.kind == ModelKind::OneVsAll
                                        ? MulticlassMode::OneVsAll
                                        : MulticlassMode::Multinomial;
            validate_multiclass_model(model.multiclass);
            break;
        }
    }
    return model;
}

}  // namespace sblr
