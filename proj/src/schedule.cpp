#include <gaintune/math/schedule.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaintune {

bool ContactSchedule::active(int contact, double t) const
{
    return current(contact, t) != nullptr;
}

const Foothold* ContactSchedule::current(int contact, double t) const
{
    for (const auto& f : footholds)
    {
        if (f.contact == contact && t >= f.t_begin && t < f.t_end)
        {
            return &f;
        }
    }
    // the last window is closed at t*
    for (auto it = footholds.rbegin(); it != footholds.rend(); ++it)
    {
        if (it->contact == contact)
        {
            return (t >= it->t_begin && t <= it->t_end && it->t_end >= duration) ? &*it : nullptr;
        }
    }
    return nullptr;
}

const Foothold* ContactSchedule::next(int contact, double t) const
{
    for (const auto& f : footholds)
    {
        if (f.contact == contact && f.t_begin >= t)
        {
            return &f;
        }
    }
    return nullptr;
}

const Foothold& ContactSchedule::latest(int contact, double t) const
{
    const Foothold* best = nullptr;
    for (const auto& f : footholds)
    {
        if (f.contact == contact && (best == nullptr || f.t_begin <= t))
        {
            best = &f;
        }
    }
    if (best == nullptr)
    {
        throw std::logic_error("schedule has no foothold for contact");
    }
    return *best;
}

const Foothold& ContactSchedule::target(int contact, double t) const
{
    if (const Foothold* c = current(contact, t))
    {
        return *c;
    }
    if (const Foothold* n = next(contact, t))
    {
        return *n;
    }
    return latest(contact, t);
}

ContactSchedule make_schedule(double step_length, double step_duration, int n_steps,
                              double double_support_ratio, const StepPlanOptions& options)
{
    if (!(step_length >= 0.0))
    {
        throw std::invalid_argument("make_schedule: step_length must be >= 0");
    }
    if (!(step_duration > 0.0))
    {
        throw std::invalid_argument("make_schedule: step_duration must be > 0");
    }
    if (n_steps < 1)
    {
        throw std::invalid_argument("make_schedule: n_steps must be >= 1");
    }
    if (!(double_support_ratio > 0.0 && double_support_ratio < 1.0))
    {
        throw std::invalid_argument("make_schedule: double_support_ratio must lie in (0, 1)");
    }

    ContactSchedule s;
    s.step_duration = step_duration;
    s.double_support_ratio = double_support_ratio;
    s.duration = (n_steps + 1) * step_duration;

    const double half_width = options.step_width / 2.0;
    auto place = [half_width] (const Eigen::Vector2d& center, double yaw, int contact)
    {
        const double side = contact == kLeft ? half_width : -half_width;
        Pose p;
        p.position = {center.x() - side * std::sin(yaw), center.y() + side * std::cos(yaw), 0.0};
        p.rotation = rot_z(yaw);
        return p;
    };

    // Centerline advances half a step length per footstep.
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double yaw = 0.0;

    std::vector<Foothold> left{{kLeft, place(center, yaw, kLeft), 0.0, 0.0}};
    std::vector<Foothold> right{{kRight, place(center, yaw, kRight), 0.0, 0.0}};

    for (int k = 1; k <= n_steps; ++k)
    {
        const int swing = (k % 2 == 1) ? kLeft : kRight;
        const double lift = (k - 1) * step_duration + double_support_ratio * step_duration;
        const double land = k * step_duration;

        const double mid_yaw = yaw + options.heading_change / 2.0;
        center += (step_length / 2.0) * Eigen::Vector2d(std::cos(mid_yaw), std::sin(mid_yaw));
        yaw += options.heading_change;

        auto& seq = swing == kLeft ? left : right;
        seq.back().t_end = lift;
        seq.push_back({swing, place(center, yaw, swing), land, 0.0});
    }
    left.back().t_end = s.duration;
    right.back().t_end = s.duration;

    s.footholds = left;
    s.footholds.insert(s.footholds.end(), right.begin(), right.end());
    return s;
}

ContactSchedule make_standing_schedule(double duration, double step_width)
{
    if (!(duration >= 0.0) || !(step_width > 0.0))
    {
        throw std::invalid_argument("make_standing_schedule: duration must be >= 0 and step_width > 0");
    }
    ContactSchedule s;
    s.duration = duration;
    s.step_duration = duration;
    s.double_support_ratio = 1.0;
    for (int c : {kLeft, kRight})
    {
        Foothold f;
        f.contact = c;
        f.pose.position = {0.0, c == kLeft ? step_width / 2.0 : -step_width / 2.0, 0.0};
        f.t_end = duration;
        s.footholds.push_back(f);
    }
    return s;
}

NominalPlan::NominalPlan(const ContactSchedule& schedule, double com_height, double gravity, double dt)
    : m_dt(dt)
    , m_height(com_height)
{
    if (!(dt > 0.0) || !(com_height > 0.0) || !(gravity > 0.0))
    {
        throw std::invalid_argument("NominalPlan: dt, com height and gravity must be positive");
    }
    const auto samples = static_cast<size_t>(std::llround(schedule.duration / dt)) + 1;
    m_zmp.resize(samples);
    m_heading.resize(samples);

    auto xy = [] (const Foothold& f) { return Eigen::Vector2d(f.pose.position.head<2>()); };
    const double T = schedule.step_duration;
    const double ds = schedule.double_support_ratio * T;

    for (size_t k = 0; k < samples; ++k)
    {
        const double t = std::min(static_cast<double>(k) * dt, schedule.duration);
        const int period = std::min(static_cast<int>(t / T), static_cast<int>(std::llround(schedule.duration / T)) - 1);
        const double tau = t - period * T;
        const bool last = (period + 1) * T >= schedule.duration - 1e-9;

        // Stance foot of the step in this period; the swing foot is the other one.
        const int swing = ((period + 1) % 2 == 1) ? kLeft : kRight;
        const int stance = 1 - swing;
        const double t0 = period * T;

        const Eigen::Vector2d left_now = xy(schedule.latest(kLeft, t0));
        const Eigen::Vector2d right_now = xy(schedule.latest(kRight, t0));
        const Eigen::Vector2d middle = 0.5 * (left_now + right_now);

        Eigen::Vector2d from;
        if (period == 0)
        {
            from = middle;
        } else
        {
            // stance foot of the previous period
            from = xy(schedule.latest(swing, t0));
        }

        Eigen::Vector2d zmp;
        if (last)
        {
            const double a = std::min(tau / (0.5 * T), 1.0);
            zmp = (1.0 - a) * from + a * middle;
        } else
        {
            const Eigen::Vector2d to = xy(schedule.latest(stance, t0));
            const double a = std::min(tau / ds, 1.0);
            zmp = (1.0 - a) * from + a * to;
        }
        m_zmp[k] = zmp;
        const double yl = yaw_of(schedule.latest(kLeft, t).pose.rotation);
        const double yr = yaw_of(schedule.latest(kRight, t).pose.rotation);
        m_heading[k] = std::atan2(std::sin(yl) + std::sin(yr), std::cos(yl) + std::cos(yr));
    }

    // LIPM two-point boundary problem x'' = w^2 (x - r), x(0) = r(0), x(t*) = r(t*),
    // discretized with central differences and solved by the Thomas algorithm.
    const double w2dt2 = gravity / com_height * dt * dt;
    m_com.assign(samples, Eigen::Vector2d::Zero());
    m_com.front() = m_zmp.front();
    m_com.back() = m_zmp.back();
    if (samples > 2)
    {
        const size_t m = samples - 2;
        std::vector<double> c_prime(m);
        std::vector<Eigen::Vector2d> d_prime(m);
        const double diag = 2.0 + w2dt2;
        for (size_t i = 0; i < m; ++i)
        {
            Eigen::Vector2d rhs = w2dt2 * m_zmp[i + 1];
            if (i == 0)
                rhs += m_com.front();
            if (i == m - 1)
                rhs += m_com.back();
            const double denom = i == 0 ? diag : diag + c_prime[i - 1];
            c_prime[i] = -1.0 / denom;
            d_prime[i] = i == 0 ? Eigen::Vector2d(rhs / denom) : Eigen::Vector2d((rhs + d_prime[i - 1]) / denom);
        }
        m_com[m] = d_prime[m - 1];
        for (size_t i = m - 1; i-- > 0;)
        {
            m_com[i + 1] = d_prime[i] - c_prime[i] * m_com[i + 2];
        }
    }

    m_com_velocity.assign(samples, Eigen::Vector2d::Zero());
    for (size_t k = 1; k + 1 < samples; ++k)
    {
        m_com_velocity[k] = (m_com[k + 1] - m_com[k - 1]) / (2.0 * dt);
    }
}

Eigen::Vector2d NominalPlan::sample(const std::vector<Eigen::Vector2d>& series, double t) const
{
    const double x = std::clamp(t / m_dt, 0.0, static_cast<double>(series.size() - 1));
    const auto i = static_cast<size_t>(std::floor(x));
    if (i + 1 >= series.size())
    {
        return series.back();
    }
    const double a = x - static_cast<double>(i);
    return (1.0 - a) * series[i] + a * series[i + 1];
}

Eigen::Vector2d NominalPlan::zmp(double t) const
{
    return sample(m_zmp, t);
}

Eigen::Vector2d NominalPlan::com(double t) const
{
    return sample(m_com, t);
}

Eigen::Vector2d NominalPlan::com_velocity(double t) const
{
    return sample(m_com_velocity, t);
}

double NominalPlan::heading(double t) const
{
    const double x = std::clamp(t / m_dt, 0.0, static_cast<double>(m_heading.size() - 1));
    return m_heading[static_cast<size_t>(std::llround(x))];
}

} // namespace gaintune
