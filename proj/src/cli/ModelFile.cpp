#include "deepesn/cli/ModelFile.hpp"

#include "deepesn/Errors.hpp"
#include "deepesn/Tasks.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace deepesn::cli {

namespace {

void write_dense(std::ostream& out, const Eigen::MatrixXd& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_float(m(i, j));
        out << '\n';
    }
}

void write_weights(std::ostream& out, const std::string& name, const WeightMatrix<double>& w)
{
    if (const auto* s = w.sparse()) {
        out << name << " sparse " << s->rows() << ' ' << s->cols() << ' ' << s->nonZeros() << '\n';
        for (Eigen::Index c = 0; c < s->outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(*s, c); it; ++it)
                out << it.row() << ' ' << it.col() << ' ' << format_float(it.value()) << '\n';
        return;
    }
    out << name << " dense " << w.rows() << ' ' << w.cols() << '\n';
    write_dense(out, *w.dense());
}

// Token reader with error messages that name the expected field.
class Reader {
public:
    explicit Reader(const std::string& text) : in_(text) {}

    std::string word(const char* what)
    {
        std::string w;
        if (!(in_ >> w)) throw DataError(std::string("model file truncated, expected ") + what);
        return w;
    }

    void expect(const std::string& literal)
    {
        const std::string w = word(literal.c_str());
        if (w != literal) throw DataError("model file: expected '" + literal + "', found '" + w + "'");
    }

    long long integer(const char* what)
    {
        const std::string w = word(what);
        char* end = nullptr;
        const long long v = std::strtoll(w.c_str(), &end, 10);
        if (end == w.c_str() || *end != '\0') throw DataError(std::string("model file: bad integer for ") + what);
        return v;
    }

    double real(const char* what)
    {
        const std::string w = word(what);
        char* end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end == w.c_str() || *end != '\0') throw DataError(std::string("model file: bad number for ") + what);
        return v;
    }

    Eigen::MatrixXd dense(Eigen::Index rows, Eigen::Index cols, const char* what)
    {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = real(what);
        return m;
    }

    WeightMatrix<double> weights(const std::string& name)
    {
        expect(name);
        const std::string kind = word("storage kind");
        const Eigen::Index rows = integer("rows");
        const Eigen::Index cols = integer("cols");
        if (rows < 0 || cols < 0) throw DataError("model file: negative dimensions for " + name);
        if (kind == "dense") return WeightMatrix<double>(dense(rows, cols, name.c_str()));
        if (kind != "sparse") throw DataError("model file: unknown storage kind '" + kind + "'");
        const Eigen::Index nnz = integer("entry count");
        std::vector<Eigen::Triplet<double>> triplets;
        for (Eigen::Index k = 0; k < nnz; ++k) {
            const auto i = integer("row index");
            const auto j = integer("column index");
            if (i < 0 || i >= rows || j < 0 || j >= cols) throw DataError("model file: sparse index out of range");
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), real(name.c_str()));
        }
        Eigen::SparseMatrix<double> s(rows, cols);
        s.setFromTriplets(triplets.begin(), triplets.end());
        return WeightMatrix<double>(std::move(s));
    }

private:
    std::istringstream in_;
};

} // namespace

std::string save_model(const Model& m)
{
    std::ostringstream out;
    const auto& p = m.provenance;
    out << "deepesn-model " << kModelFormatVersion << '\n';
    out << "library_version " << (p.library_version.empty() ? "unknown" : p.library_version) << '\n';
    out << "config_hash " << (p.config_hash.empty() ? "none" : p.config_hash) << '\n';
    out << "seed " << p.seed << '\n';
    out << "task " << (p.task.empty() ? "none" : p.task) << '\n';
    out << "input_dim " << m.reservoir.input_dim() << '\n';
    out << "layers " << m.reservoir.num_layers() << '\n';
    for (std::size_t i = 0; i < m.reservoir.num_layers(); ++i) {
        const auto& l = m.reservoir.layer(i);
        out << "layer " << i + 1 << '\n';
        out << "units " << l.units << '\n';
        out << "leak_rate " << format_float(l.leak_rate) << '\n';
        out << "activation " << to_string(l.activation) << '\n';
        write_weights(out, "input_weights", l.input_weights);
        write_weights(out, "recurrent_weights", l.recurrent_weights);
        if (l.bias) {
            out << "bias " << l.bias->size() << '\n';
            write_dense(out, l.bias->transpose());
        } else {
            out << "bias none\n";
        }
    }
    if (m.readout) {
        const auto& r = *m.readout;
        out << "readout " << r.weights.rows() << ' ' << r.weights.cols() << '\n';
        out << "regularization " << format_float(r.regularization) << '\n';
        write_dense(out, r.weights);
        if (r.intercept) {
            out << "intercept " << r.intercept->size() << '\n';
            write_dense(out, r.intercept->transpose());
        } else {
            out << "intercept none\n";
        }
    } else {
        out << "readout none\n";
    }
    out << "end\n";
    return out.str();
}

Model load_model(const std::string& text)
{
    Reader in(text);
    const std::string magic = in.word("header");
    if (magic != "deepesn-model") throw DataError("not a deepesn model file");
    const long long version = in.integer("format version");
    if (version != kModelFormatVersion)
        throw ConfigError("model format version " + std::to_string(version) + " is not supported (this build reads " +
                          std::to_string(kModelFormatVersion) + ")");
    Model m;
    in.expect("library_version");
    m.provenance.library_version = in.word("library version");
    in.expect("config_hash");
    m.provenance.config_hash = in.word("config hash");
    in.expect("seed");
    m.provenance.seed = static_cast<std::uint64_t>(std::strtoull(in.word("seed").c_str(), nullptr, 10));
    in.expect("task");
    m.provenance.task = in.word("task");
    in.expect("input_dim");
    const Eigen::Index input_dim = in.integer("input_dim");
    in.expect("layers");
    const auto n_layers = in.integer("layer count");
    if (n_layers < 1) throw DataError("model file: layer count must be positive");

    std::vector<LayerSpec<double>> layers;
    for (long long i = 0; i < n_layers; ++i) {
        in.expect("layer");
        if (in.integer("layer index") != i + 1) throw DataError("model file: layers out of order");
        LayerSpec<double> l;
        in.expect("units");
        l.units = in.integer("units");
        in.expect("leak_rate");
        l.leak_rate = in.real("leak_rate");
        in.expect("activation");
        l.activation = activation_from_string(in.word("activation"));
        l.input_weights = in.weights("input_weights");
        l.recurrent_weights = in.weights("recurrent_weights");
        in.expect("bias");
        const std::string bias = in.word("bias size");
        if (bias != "none") {
            const Eigen::Index n = std::strtoll(bias.c_str(), nullptr, 10);
            l.bias = in.dense(n, 1, "bias").col(0);
        }
        layers.push_back(std::move(l));
    }
    m.reservoir = DeepReservoir<double>(input_dim, std::move(layers));

    in.expect("readout");
    const std::string rows = in.word("readout rows");
    if (rows != "none") {
        Readout<double> r;
        const Eigen::Index n_out = std::strtoll(rows.c_str(), nullptr, 10);
        const Eigen::Index dims = in.integer("readout cols");
        if (dims != m.reservoir.state_dim()) throw StructuralError("model file: readout width does not match the reservoir");
        in.expect("regularization");
        r.regularization = in.real("regularization");
        r.weights = in.dense(n_out, dims, "readout weights");
        r.trained_on_dims = dims;
        in.expect("intercept");
        const std::string ic = in.word("intercept size");
        if (ic != "none") r.intercept = in.dense(std::strtoll(ic.c_str(), nullptr, 10), 1, "intercept").col(0);
        m.readout = std::move(r);
    }
    in.expect("end");
    return m;
}

void write_model_file(const Model& m, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write model file '" + path + "'");
    out << save_model(m);
    if (!out) throw ConfigError("failed writing model file '" + path + "'");
}

Model read_model_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read model file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

} // namespace deepesn::cli
