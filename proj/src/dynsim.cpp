#include "netinf/dynsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "netinf/error.hpp"

namespace netinf {

namespace {

Eigen::MatrixXd adjacency_matrix(const DirectedNetwork& net)
{
    const auto n = static_cast<Eigen::Index>(net.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = net.adj(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ? 1.0 : 0.0;
        }
    }
    return a;
}

std::size_t step_count(const TimeGrid& grid)
{
    if (!(grid.dt > 0.0) || !std::isfinite(grid.dt)) {
        throw ParameterError("time step must be positive");
    }
    if (grid.record_every < 1) {
        throw ParameterError("record_every must be positive");
    }
    const double span = grid.t_end - grid.t_begin;
    if (!(span >= grid.dt * (1.0 - 1e-9))) {
        throw ParameterError("simulation span must be at least one time step");
    }
    return static_cast<std::size_t>(std::llround(span / grid.dt));
}

// Classical RK4 over a fixed grid. `deriv(t, y)` returns dy/dt; `record(t, y)`
// stores a sample.
template <typename Deriv, typename Record>
void integrate_rk4(Eigen::VectorXd y, const TimeGrid& grid, Deriv&& deriv, Record&& record)
{
    const auto steps = step_count(grid);
    const double h = grid.dt;
    record(grid.t_begin, y);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = grid.t_begin + static_cast<double>(s) * h;
        const Eigen::VectorXd k1 = deriv(t, y);
        const Eigen::VectorXd k2 = deriv(t + 0.5 * h, y + 0.5 * h * k1);
        const Eigen::VectorXd k3 = deriv(t + 0.5 * h, y + 0.5 * h * k2);
        const Eigen::VectorXd k4 = deriv(t + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) {
            throw DivergenceError("non-finite state at integration step " + std::to_string(s + 1), s + 1);
        }
        if ((s + 1) % grid.record_every == 0) {
            record(grid.t_begin + static_cast<double>(s + 1) * h, y);
        }
    }
}

Trajectory allocate(ModelKind kind, std::size_t n, const TimeGrid& grid)
{
    const auto samples = step_count(grid) / grid.record_every + 1;
    Trajectory traj;
    traj.kind = kind;
    traj.times.reserve(samples);
    traj.states.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(samples));
    traj.rates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(samples));
    return traj;
}

void check_forcings(const std::vector<ForcingSpec>& forcings, std::size_t n)
{
    for (const auto& f : forcings) {
        if (f.node >= n) {
            throw ParameterError("forcing node out of range");
        }
        if (!(f.duration > 0.0) || !(f.t_start >= 0.0)) {
            throw ParameterError("forcing needs duration > 0 and t_start >= 0");
        }
    }
}

} // namespace

ForcingSpec impulse_forcing(std::size_t node, double magnitude, double t_start, double duration)
{
    if (!(duration > 0.0)) {
        throw ParameterError("impulse duration must be positive");
    }
    if (!(t_start >= 0.0)) {
        throw ParameterError("impulse start must be non-negative");
    }
    return ForcingSpec{node, magnitude, t_start, duration};
}

Eigen::VectorXd forcing_at(const std::vector<ForcingSpec>& forcings, std::size_t n, double t)
{
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (const auto& pulse : forcings) {
        if (pulse.active(t)) {
            f[static_cast<Eigen::Index>(pulse.node)] += pulse.magnitude;
        }
    }
    return f;
}

Trajectory Trajectory::head(double duration) const
{
    if (times.empty()) {
        return *this;
    }
    const double limit = times.front() + duration + 0.5 * std::max(step(), 0.0);
    std::size_t count = 0;
    while (count < times.size() && times[count] <= limit) {
        ++count;
    }
    Trajectory out;
    out.kind = kind;
    out.times.assign(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(count));
    out.states = states.leftCols(static_cast<Eigen::Index>(count));
    out.rates = rates.leftCols(static_cast<Eigen::Index>(count));
    return out;
}

Trajectory Trajectory::tail_from(std::size_t first) const
{
    first = std::min(first, times.size());
    const auto count = static_cast<Eigen::Index>(times.size() - first);
    Trajectory out;
    out.kind = kind;
    out.times.assign(times.begin() + static_cast<std::ptrdiff_t>(first), times.end());
    out.states = states.rightCols(count);
    out.rates = rates.rightCols(count);
    return out;
}

ModelKind kind_of(const OscillatorModel& model)
{
    return std::holds_alternative<MassSpringModel>(model) ? ModelKind::MassSpring : ModelKind::Kuramoto;
}

const DirectedNetwork& network_of(const OscillatorModel& model)
{
    return std::visit([](const auto& m) -> const DirectedNetwork& { return m.net; }, model);
}

Eigen::MatrixXd spring_operator(const DirectedNetwork& net, const MassSpringParams& params)
{
    const auto n = static_cast<Eigen::Index>(net.size());
    Eigen::MatrixXd op = adjacency_matrix(net);
    if (params.coupling == SpringCoupling::Laplacian) {
        op.diagonal() -= op.rowwise().sum();
    }
    if (params.wall_first) {
        op(0, 0) -= 1.0;
    }
    if (params.wall_last) {
        op(n - 1, n - 1) -= 1.0;
    }
    return op;
}

Trajectory simulate_mass_spring(const MassSpringModel& model, const std::vector<ForcingSpec>& forcings,
                                const OscillatorState& start, const TimeGrid& grid)
{
    const auto& p = model.params;
    const auto n = model.net.size();
    const auto ni = static_cast<Eigen::Index>(n);
    if (start.position.size() != ni || start.velocity.size() != ni) {
        throw ParameterError("mass-spring initial state must have length n");
    }
    if (!(p.mass > 0.0) || !(p.damping >= 0.0) || !(p.spring > 0.0)) {
        throw ParameterError("mass-spring parameters need m > 0, c >= 0, k > 0");
    }
    check_forcings(forcings, n);

    const Eigen::MatrixXd stiffness = p.spring * spring_operator(model.net, p);
    const double inv_mass = 1.0 / p.mass;
    auto deriv = [&](double t, const Eigen::VectorXd& y) {
        Eigen::VectorXd dy(2 * ni);
        const auto x = y.head(ni);
        const auto v = y.tail(ni);
        dy.head(ni) = v;
        dy.tail(ni) = inv_mass * (stiffness * x - p.damping * v + forcing_at(forcings, n, t));
        return dy;
    };

    auto traj = allocate(ModelKind::MassSpring, n, grid);
    Eigen::Index col = 0;
    auto record = [&](double t, const Eigen::VectorXd& y) {
        traj.times.push_back(t);
        traj.states.col(col) = y.head(ni);
        traj.rates.col(col) = y.tail(ni);
        ++col;
    };
    Eigen::VectorXd y(2 * ni);
    y << start.position, start.velocity;
    integrate_rk4(std::move(y), grid, deriv, record);
    return traj;
}

Trajectory simulate_mass_spring(const DirectedNetwork& net, const MassSpringParams& params,
                                const std::vector<ForcingSpec>& forcings,
                                const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                                double t_end, double dt)
{
    return simulate_mass_spring(MassSpringModel{net, params}, forcings, OscillatorState{x0, v0},
                                TimeGrid{0.0, t_end, dt, 1});
}

Trajectory simulate_kuramoto(const KuramotoModel& model, const std::vector<ForcingSpec>& forcings,
                             const OscillatorState& start, const TimeGrid& grid)
{
    const auto& p = model.params;
    const auto n = model.net.size();
    const auto ni = static_cast<Eigen::Index>(n);
    if (start.position.size() != ni || p.omega.size() != n) {
        throw ParameterError("kuramoto phases and frequencies must have length n");
    }
    if (!(p.coupling >= 0.0)) {
        throw ParameterError("kuramoto coupling must be non-negative");
    }
    for (double w : p.omega) {
        if (!std::isfinite(w)) {
            throw ParameterError("natural frequencies must be finite");
        }
    }
    check_forcings(forcings, n);

    const Eigen::MatrixXd adj = adjacency_matrix(model.net);
    const Eigen::Map<const Eigen::VectorXd> omega(p.omega.data(), ni);
    const double gain = p.coupling / static_cast<double>(n);
    // sum_j A_ij sin(theta_j - theta_i) = cos(theta_i) (A sin)_i - sin(theta_i) (A cos)_i
    auto deriv = [&](double t, const Eigen::VectorXd& theta) {
        const Eigen::VectorXd s = theta.array().sin().matrix();
        const Eigen::VectorXd c = theta.array().cos().matrix();
        const Eigen::VectorXd pull =
            (c.array() * (adj * s).array() - s.array() * (adj * c).array()).matrix();
        Eigen::VectorXd d = omega + gain * pull + forcing_at(forcings, n, t);
        return d;
    };

    auto traj = allocate(ModelKind::Kuramoto, n, grid);
    Eigen::Index col = 0;
    auto record = [&](double t, const Eigen::VectorXd& theta) {
        traj.times.push_back(t);
        traj.states.col(col) = theta;
        traj.rates.col(col) = deriv(t, theta);
        ++col;
    };
    integrate_rk4(start.position, grid, deriv, record);
    return traj;
}

Trajectory simulate_kuramoto(const DirectedNetwork& net, const KuramotoParams& params,
                             const std::vector<ForcingSpec>& forcings, const Eigen::VectorXd& theta0,
                             double t_end, double dt)
{
    const Eigen::VectorXd none = Eigen::VectorXd::Zero(theta0.size());
    return simulate_kuramoto(KuramotoModel{net, params}, forcings, OscillatorState{theta0, none},
                             TimeGrid{0.0, t_end, dt, 1});
}

Trajectory simulate(const OscillatorModel& model, const std::vector<ForcingSpec>& forcings,
                    const OscillatorState& start, const TimeGrid& grid)
{
    if (const auto* ms = std::get_if<MassSpringModel>(&model)) {
        return simulate_mass_spring(*ms, forcings, start, grid);
    }
    return simulate_kuramoto(std::get<KuramotoModel>(model), forcings, start, grid);
}

OscillatorState random_initial_state(std::size_t n, double scale, std::uint64_t seed, bool phases)
{
    if (!(scale >= 0.0)) {
        throw ParameterError("initial-state scale must be non-negative");
    }
    const auto ni = static_cast<Eigen::Index>(n);
    OscillatorState st{Eigen::VectorXd::Zero(ni), Eigen::VectorXd::Zero(ni)};
    if (scale == 0.0) {
        return st;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-scale, scale);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index i = 0; i < ni; ++i) {
        double v = unif(rng);
        if (phases && scale > std::numbers::pi) {
            v = std::fmod(v, two_pi);
            if (v < 0.0) {
                v += two_pi;
            }
        }
        st.position[i] = v;
    }
    return st;
}

bool settled(ModelKind kind, const Eigen::VectorXd& state, const Eigen::VectorXd& rate, double tol)
{
    if (kind == ModelKind::MassSpring) {
        return state.cwiseAbs().maxCoeff() < tol && rate.cwiseAbs().maxCoeff() < tol;
    }
    return rate.maxCoeff() - rate.minCoeff() < tol;
}

SettleResult settle_to_steady_state(const OscillatorModel& model, const OscillatorState& start,
                                    double tol, double t_max, double dt)
{
    if (!(tol > 0.0)) {
        throw ParameterError("settle tolerance must be positive");
    }
    const auto kind = kind_of(model);
    const auto n = static_cast<Eigen::Index>(network_of(model).size());

    SettleResult result;
    OscillatorState current = start;
    double t = 0.0;
    // Integrate in one-second chunks and scan each for the first settled sample.
    const double chunk = std::max(1.0, dt);
    while (true) {
        const double span = std::min(chunk, t_max - t);
        if (span < dt) {
            break;
        }
        const auto steps = static_cast<double>(std::llround(span / dt));
        const auto traj = simulate(model, {}, current, TimeGrid{t, t + steps * dt, dt, 1});
        for (std::size_t s = 0; s < traj.samples(); ++s) {
            const Eigen::VectorXd x = traj.states.col(static_cast<Eigen::Index>(s));
            const Eigen::VectorXd r = traj.rates.col(static_cast<Eigen::Index>(s));
            if (settled(kind, x, r, tol)) {
                result.state.position = x;
                result.state.velocity = kind == ModelKind::MassSpring ? r : Eigen::VectorXd::Zero(n);
                result.rate = r;
                result.time = traj.times[s];
                result.settled = true;
                return result;
            }
        }
        const auto last = static_cast<Eigen::Index>(traj.samples() - 1);
        current.position = traj.states.col(last);
        current.velocity = kind == ModelKind::MassSpring ? Eigen::VectorXd(traj.rates.col(last))
                                                         : Eigen::VectorXd::Zero(n);
        t = traj.times.back();
        result.rate = traj.rates.col(last);
    }
    result.state = current;
    result.time = t;
    result.settled = false;
    if (result.rate.size() == 0) {
        result.rate = simulate(model, {}, current, TimeGrid{0.0, dt, dt, 1}).rates.col(0);
    }
    return result;
}

double estimate_transient_time(const Trajectory& traj, double tol)
{
    if (traj.samples() == 0) {
        throw ParameterError("estimate_transient_time: empty trajectory");
    }
    std::size_t first_ok = traj.samples();
    for (std::size_t s = traj.samples(); s-- > 0;) {
        const auto col = static_cast<Eigen::Index>(s);
        if (!settled(traj.kind, traj.states.col(col), traj.rates.col(col), tol)) {
            break;
        }
        first_ok = s;
    }
    if (first_ok == traj.samples()) {
        return std::numeric_limits<double>::infinity();
    }
    return traj.times[first_ok] - traj.times.front();
}

double order_parameter(const Eigen::VectorXd& phases)
{
    if (phases.size() == 0) {
        return 0.0;
    }
    const double c = phases.array().cos().mean();
    const double s = phases.array().sin().mean();
    return std::hypot(c, s);
}

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj)
{
    const auto n = traj.nodes();
    out << "t";
    for (std::size_t i = 0; i < n; ++i) {
        out << ",x_" << i;
    }
    for (std::size_t i = 0; i < n; ++i) {
        out << ",v_" << i;
    }
    out << '\n';
    for (std::size_t s = 0; s < traj.samples(); ++s) {
        const auto col = static_cast<Eigen::Index>(s);
        out << format_double(traj.times[s]);
        for (Eigen::Index i = 0; i < traj.states.rows(); ++i) {
            out << ',' << format_double(traj.states(i, col));
        }
        for (Eigen::Index i = 0; i < traj.rates.rows(); ++i) {
            out << ',' << format_double(traj.rates(i, col));
        }
        out << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& in, ModelKind kind)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw ParameterError("trajectory file: missing header");
    }
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            header.push_back(cell);
        }
    }
    if (header.size() < 3 || header[0] != "t" || (header.size() - 1) % 2 != 0) {
        throw ParameterError("trajectory file: header must be t,x_0..,v_0..");
    }
    const auto n = (header.size() - 1) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        if (header[1 + i] != "x_" + std::to_string(i) || header[1 + n + i] != "v_" + std::to_string(i)) {
            throw ParameterError("trajectory file: unexpected column " + header[1 + i]);
        }
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        row.reserve(header.size());
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p <= end) {
            const char* comma = std::find(p, end, ',');
            double v = 0.0;
            const auto res = std::from_chars(p, comma, v);
            if (res.ec != std::errc() || res.ptr != comma) {
                throw ParameterError("trajectory file: bad number in row " + std::to_string(rows.size() + 1));
            }
            row.push_back(v);
            p = comma + 1;
        }
        if (row.size() != header.size()) {
            throw ParameterError("trajectory file: wrong column count in row " + std::to_string(rows.size() + 1));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ParameterError("trajectory file: no samples");
    }

    Trajectory traj;
    traj.kind = kind;
    const auto T = static_cast<Eigen::Index>(rows.size());
    traj.states.resize(static_cast<Eigen::Index>(n), T);
    traj.rates.resize(static_cast<Eigen::Index>(n), T);
    for (Eigen::Index s = 0; s < T; ++s) {
        const auto& row = rows[static_cast<std::size_t>(s)];
        traj.times.push_back(row[0]);
        for (std::size_t i = 0; i < n; ++i) {
            traj.states(static_cast<Eigen::Index>(i), s) = row[1 + i];
            traj.rates(static_cast<Eigen::Index>(i), s) = row[1 + n + i];
        }
    }
    if (traj.samples() > 1) {
        const double h = traj.step();
        if (!(h > 0.0)) {
            throw ParameterError("trajectory file: times must be strictly increasing");
        }
        for (std::size_t s = 1; s < traj.samples(); ++s) {
            const double expect = traj.times[0] + static_cast<double>(s) * h;
            if (std::abs(traj.times[s] - expect) > 1e-9 * std::max(1.0, std::abs(expect)) + 1e-12 * h * static_cast<double>(s)) {
                throw ParameterError("trajectory file: time grid is not uniform");
            }
        }
    }
    return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw ParameterError("cannot write trajectory file " + path);
    }
    write_trajectory_csv(out, traj);
}

Trajectory load_trajectory(const std::string& path, ModelKind kind)
{
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("cannot open trajectory file " + path);
    }
    return read_trajectory_csv(in, kind);
}

} // namespace netinf
