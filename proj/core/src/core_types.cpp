#include "hybridcorr/core_types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <tuple>

#include "hybridcorr/errors.hpp"

namespace hcorr {

std::string_view to_string(ComponentKind kind) {
    switch (kind) {
    case ComponentKind::G1:
        return "G1";
    case ComponentKind::G2:
        return "G2";
    case ComponentKind::Heston:
        return "Heston";
    case ComponentKind::Bates:
        return "Bates";
    case ComponentKind::SingleStateEquity:
        return "Single";
    }
    return "?";
}

ComponentKind parse_component_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "g1" || lower == "g1++") return ComponentKind::G1;
    if (lower == "g2" || lower == "g2++") return ComponentKind::G2;
    if (lower == "heston") return ComponentKind::Heston;
    if (lower == "bates") return ComponentKind::Bates;
    if (lower == "single" || lower == "singlestateequity" || lower == "dupire")
        return ComponentKind::SingleStateEquity;
    throw ParseError("unknown component kind '" + std::string(name) + "'");
}

std::vector<std::string> state_labels_for(ComponentKind kind) {
    switch (kind) {
    case ComponentKind::G1:
        return {"x"};
    case ComponentKind::G2:
        return {"x", "y"};
    case ComponentKind::Heston:
    case ComponentKind::Bates:
        return {"s", "v"};
    case ComponentKind::SingleStateEquity:
        return {"s"};
    }
    return {};
}

ComponentKind ComponentSpec::kind() const {
    return std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, G1Params>) return ComponentKind::G1;
            else if constexpr (std::is_same_v<T, G2Params>) return ComponentKind::G2;
            else if constexpr (std::is_same_v<T, HestonParams>) return ComponentKind::Heston;
            else if constexpr (std::is_same_v<T, BatesParams>) return ComponentKind::Bates;
            else return ComponentKind::SingleStateEquity;
        },
        params_);
}

bool ComponentSpec::is_rate() const {
    const auto k = kind();
    return k == ComponentKind::G1 || k == ComponentKind::G2;
}

bool ComponentSpec::is_heston() const {
    const auto k = kind();
    return k == ComponentKind::Heston || k == ComponentKind::Bates;
}

const HestonParams* ComponentSpec::heston() const {
    if (const auto* h = std::get_if<HestonParams>(&params_)) return h;
    if (const auto* b = std::get_if<BatesParams>(&params_)) return &b->heston;
    return nullptr;
}

const BatesJumpParams* ComponentSpec::jumps() const {
    if (const auto* b = std::get_if<BatesParams>(&params_)) return &b->jump;
    return nullptr;
}

double ComponentSpec::inner_correlation() const {
    if (const auto* p = g2()) return p->rho_xy;
    if (const auto* h = heston()) return h->rho_sv;
    return 0.0;
}

Eigen::MatrixXd ComponentSpec::diagonal_block() const {
    const auto n = static_cast<Eigen::Index>(state_count());
    Eigen::MatrixXd block = Eigen::MatrixXd::Identity(n, n);
    if (n == 2) {
        block(0, 1) = block(1, 0) = inner_correlation();
    }
    return block;
}

std::vector<std::size_t> HybridSystemSpec::block_sizes() const {
    std::vector<std::size_t> sizes;
    sizes.reserve(components.size());
    for (const auto& c : components) sizes.push_back(c.state_count());
    return sizes;
}

std::size_t HybridSystemSpec::state_count() const {
    std::size_t n = 0;
    for (const auto& c : components) n += c.state_count();
    return n;
}

std::vector<std::string> HybridSystemSpec::labels() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < components.size(); ++i) {
        for (const auto& s : components[i].state_labels()) {
            out.push_back("c" + std::to_string(i) + "." + s);
        }
    }
    return out;
}

std::vector<Eigen::MatrixXd> HybridSystemSpec::diagonal_blocks() const {
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(components.size());
    for (const auto& c : components) blocks.push_back(c.diagonal_block());
    return blocks;
}

namespace {

void check_correlation(std::vector<std::string>& out, const std::string& where, double rho) {
    if (!(rho >= -1.0 && rho <= 1.0)) out.push_back(where + " must lie in [-1,1]");
}

void check_positive(std::vector<std::string>& out, const std::string& where, double value) {
    if (!(value > 0.0)) out.push_back(where + " must be > 0");
}

void check_component(std::vector<std::string>& out, std::size_t index, const ComponentSpec& c) {
    const std::string p = "c" + std::to_string(index) + ".";
    if (const auto* g = c.g2()) {
        check_positive(out, p + "a", g->a);
        check_positive(out, p + "b", g->b);
        check_positive(out, p + "sigma", g->sigma);
        check_positive(out, p + "eta", g->eta);
        check_correlation(out, p + "rho_xy", g->rho_xy);
    } else if (const auto* g1 = c.g1()) {
        check_positive(out, p + "a", g1->a);
        check_positive(out, p + "sigma", g1->sigma);
    } else if (const auto* h = c.heston()) {
        check_positive(out, p + "kappa", h->kappa);
        check_positive(out, p + "theta", h->theta);
        check_positive(out, p + "xi", h->xi);
        check_positive(out, p + "v0", h->v0);
        check_correlation(out, p + "rho_sv", h->rho_sv);
        if (const auto* j = c.jumps()) {
            if (!(j->lambda >= 0.0)) out.push_back(p + "lambda must be >= 0");
            if (!(j->sigma_j >= 0.0)) out.push_back(p + "sigma_j must be >= 0");
        }
    }
}

}  // namespace

std::vector<std::string> validate_system(const HybridSystemSpec& spec) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < spec.components.size(); ++i) {
        check_component(out, i, spec.components[i]);
    }
    if (!spec.full_correlation) return out;

    const Eigen::MatrixXd& m = *spec.full_correlation;
    const auto n = static_cast<Eigen::Index>(spec.state_count());
    if (m.rows() != n || m.cols() != n) {
        out.push_back("full matrix must be " + std::to_string(n) + "x" + std::to_string(n));
        return out;
    }
    bool asymmetric = false;
    bool off_unit = false;
    bool out_of_range = false;
    for (Eigen::Index r = 0; r < n; ++r) {
        if (std::abs(m(r, r) - 1.0) > BlockCorrelationMatrix::kSymmetryTolerance) off_unit = true;
        for (Eigen::Index c = 0; c < n; ++c) {
            if (!(std::abs(m(r, c) - m(c, r)) <= BlockCorrelationMatrix::kSymmetryTolerance))
                asymmetric = true;
            if (!(m(r, c) >= -1.0 && m(r, c) <= 1.0)) out_of_range = true;
        }
    }
    if (asymmetric) out.push_back("full matrix is not symmetric");
    if (off_unit) out.push_back("full matrix must have unit diagonal");
    if (out_of_range) out.push_back("full matrix has an entry outside [-1,1]");

    Eigen::Index offset = 0;
    for (std::size_t i = 0; i < spec.components.size(); ++i) {
        const auto& c = spec.components[i];
        const auto k = static_cast<Eigen::Index>(c.state_count());
        if (k == 2 && std::abs(m(offset, offset + 1) - c.inner_correlation()) >
                          BlockCorrelationMatrix::kSymmetryTolerance) {
            out.push_back("diagonal block of c" + std::to_string(i) +
                          " disagrees with its inner correlation");
        }
        offset += k;
    }
    return out;
}

BlockCorrelationMatrix::BlockCorrelationMatrix(Eigen::MatrixXd entries,
                                               std::vector<std::size_t> block_sizes,
                                               std::vector<std::string> labels)
    : entries_(std::move(entries)), block_sizes_(std::move(block_sizes)), labels_(std::move(labels)) {
    std::size_t total = 0;
    for (auto s : block_sizes_) {
        if (s == 0) throw DimensionError("block sizes must be positive");
        total += s;
    }
    if (entries_.rows() != entries_.cols())
        throw DimensionError("correlation matrix must be square");
    if (static_cast<std::size_t>(entries_.rows()) != total)
        throw DimensionError("matrix side " + std::to_string(entries_.rows()) +
                             " does not match block sizes total " + std::to_string(total));
    if (labels_.empty()) {
        for (std::size_t b = 0; b < block_sizes_.size(); ++b)
            for (std::size_t k = 0; k < block_sizes_[b]; ++k)
                labels_.push_back("c" + std::to_string(b) + "." + std::to_string(k));
    }
    if (labels_.size() != total) throw DimensionError("label count does not match matrix side");

    const auto n = entries_.rows();
    for (Eigen::Index r = 0; r < n; ++r) {
        if (entries_(r, r) != 1.0) throw DimensionError("correlation matrix must have unit diagonal");
        for (Eigen::Index c = r + 1; c < n; ++c) {
            if (!(std::abs(entries_(r, c) - entries_(c, r)) <= kSymmetryTolerance))
                throw DimensionError("correlation matrix must be symmetric");
        }
    }
}

std::size_t BlockCorrelationMatrix::block_offset(std::size_t block) const {
    if (block >= block_sizes_.size()) throw DimensionError("block index out of range");
    std::size_t off = 0;
    for (std::size_t b = 0; b < block; ++b) off += block_sizes_[b];
    return off;
}

Eigen::MatrixXd BlockCorrelationMatrix::block(std::size_t i, std::size_t j) const {
    const auto ri = static_cast<Eigen::Index>(block_offset(i));
    const auto cj = static_cast<Eigen::Index>(block_offset(j));
    return entries_.block(ri, cj, static_cast<Eigen::Index>(block_sizes_[i]),
                          static_cast<Eigen::Index>(block_sizes_[j]));
}

std::size_t BlockCorrelationMatrix::out_of_range_count() const {
    std::size_t count = 0;
    for (Eigen::Index r = 0; r < entries_.rows(); ++r)
        for (Eigen::Index c = r + 1; c < entries_.cols(); ++c)
            if (!(entries_(r, c) >= -1.0 && entries_(r, c) <= 1.0)) ++count;
    return count;
}

BlockCorrelationMatrix BlockCorrelationMatrix::with_entries(Eigen::MatrixXd entries) const {
    return BlockCorrelationMatrix(std::move(entries), block_sizes_, labels_);
}

BlockCorrelationMatrix assemble_block_matrix(std::span<const Eigen::MatrixXd> diagonal_blocks,
                                             const CrossBlocks& cross_blocks,
                                             std::vector<std::string> labels) {
    std::vector<std::size_t> sizes;
    std::vector<Eigen::Index> offsets;
    Eigen::Index total = 0;
    for (const auto& d : diagonal_blocks) {
        if (d.rows() != d.cols() || d.rows() == 0)
            throw DimensionError("diagonal blocks must be square and non-empty");
        offsets.push_back(total);
        sizes.push_back(static_cast<std::size_t>(d.rows()));
        total += d.rows();
    }

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(total, total);
    for (std::size_t b = 0; b < diagonal_blocks.size(); ++b) {
        m.block(offsets[b], offsets[b], diagonal_blocks[b].rows(), diagonal_blocks[b].cols()) =
            diagonal_blocks[b];
    }
    for (const auto& [key, block] : cross_blocks) {
        auto [i, j] = key;
        if (i >= sizes.size() || j >= sizes.size() || i == j)
            throw DimensionError("cross block (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") does not name two distinct components");
        if (cross_blocks.contains({j, i}) && i > j)
            throw DimensionError("cross blocks (" + std::to_string(j) + "," + std::to_string(i) +
                                 ") and its transpose both supplied");
        if (static_cast<std::size_t>(block.rows()) != sizes[i] ||
            static_cast<std::size_t>(block.cols()) != sizes[j])
            throw DimensionError("cross block (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") must be " + std::to_string(sizes[i]) + "x" +
                                 std::to_string(sizes[j]));
        m.block(offsets[i], offsets[j], block.rows(), block.cols()) = block;
        m.block(offsets[j], offsets[i], block.cols(), block.rows()) = block.transpose();
    }
    return BlockCorrelationMatrix(std::move(m), std::move(sizes), std::move(labels));
}

BlockCorrelationMatrix assemble_block_matrix(const HybridSystemSpec& spec,
                                             const CrossBlocks& cross_blocks) {
    const auto blocks = spec.diagonal_blocks();
    return assemble_block_matrix(blocks, cross_blocks, spec.labels());
}

SeriesKey SeriesKey::spot_rate(std::size_t component, double tenor) {
    return {component, ObservableKind::SpotRate, tenor};
}
SeriesKey SeriesKey::log_price(std::size_t component) {
    return {component, ObservableKind::LogPrice, 0.0};
}
SeriesKey SeriesKey::variance(std::size_t component) {
    return {component, ObservableKind::VarianceProxy, 0.0};
}
SeriesKey SeriesKey::implied_vol(std::size_t component) {
    return {component, ObservableKind::ImpliedVolAtm, 0.0};
}

SeriesKey SeriesKey::parse(std::string_view text) {
    const auto fail = [&](const char* why) {
        return ParseError("bad series key '" + std::string(text) + "': " + why);
    };
    if (text.size() < 3 || text.front() != 'c') throw fail("expected c{i}.{kind}");
    const auto dot = text.find('.');
    if (dot == std::string_view::npos) throw fail("missing '.'");
    std::size_t component = 0;
    const auto* first = text.data() + 1;
    const auto* last = text.data() + dot;
    auto [ptr, ec] = std::from_chars(first, last, component);
    if (ec != std::errc{} || ptr != last) throw fail("bad component index");

    std::string_view rest = text.substr(dot + 1);
    if (rest == "s") return log_price(component);
    if (rest == "v") return variance(component);
    if (rest == "iv") return implied_vol(component);
    if (rest.size() > 3 && rest.substr(0, 2) == "R[" && rest.back() == ']') {
        std::string_view num = rest.substr(2, rest.size() - 3);
        double tau = 0.0;
        auto [p2, ec2] = std::from_chars(num.data(), num.data() + num.size(), tau);
        if (ec2 != std::errc{} || p2 != num.data() + num.size()) throw fail("bad tenor");
        if (!(tau > 0.0)) throw fail("tenor must be > 0");
        return spot_rate(component, tau);
    }
    throw fail("unknown observable kind");
}

std::string SeriesKey::str() const {
    std::string out = "c" + std::to_string(component) + ".";
    switch (kind) {
    case ObservableKind::SpotRate:
        return out + "R[" + format_decimal(tenor) + "]";
    case ObservableKind::LogPrice:
        return out + "s";
    case ObservableKind::VarianceProxy:
        return out + "v";
    case ObservableKind::ImpliedVolAtm:
        return out + "iv";
    }
    return out;
}

bool operator<(const SeriesKey& lhs, const SeriesKey& rhs) {
    return std::tie(lhs.component, lhs.kind, lhs.tenor) <
           std::tie(rhs.component, rhs.kind, rhs.tenor);
}

bool operator==(const SeriesKey& lhs, const SeriesKey& rhs) {
    return lhs.component == rhs.component && lhs.kind == rhs.kind && lhs.tenor == rhs.tenor;
}

ObservationPanel::ObservationPanel(std::vector<double> times, SeriesMap series)
    : times_(std::move(times)), series_(std::move(series)) {
    if (times_.size() < 2) throw DimensionError("observation panel needs at least 2 times");
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] > times_[k - 1]))
            throw DimensionError("observation times must be strictly increasing");
    }
    for (const auto& [key, values] : series_) {
        if (values.size() != times_.size())
            throw DimensionError("series " + key.str() + " has " + std::to_string(values.size()) +
                                 " values, expected " + std::to_string(times_.size()));
        if (key.kind == ObservableKind::SpotRate && !(key.tenor > 0.0))
            throw DimensionError("spot-rate series " + key.str() + " needs a positive tenor");
    }
}

const std::vector<double>& ObservationPanel::at(const SeriesKey& key) const {
    const auto it = series_.find(key);
    if (it == series_.end()) throw MissingObservableError("missing observable " + key.str());
    return it->second;
}

std::string format_decimal(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    std::string out(buf, ptr);
    if (out.find_first_of(".en") == std::string::npos) out += ".0";
    return out;
}

}  // namespace hcorr
