#pragma once

#include <vector>

#include <Eigen/Dense>

#include <gaintune/math/so3.h>

namespace gaintune {

inline constexpr int kLeft = 0;
inline constexpr int kRight = 1;
inline constexpr int kNumContacts = 2;

struct Foothold
{
    int contact{kLeft};
    Pose pose; ///< sole center on the ground
    double t_begin{0.0}; ///< activation window [t_begin, t_end)
    double t_end{0.0};
};

/// Timed contact activation and foothold sequence for both feet.
struct ContactSchedule
{
    std::vector<Foothold> footholds; ///< sorted by (contact, t_begin)
    double step_duration{0.0};
    double double_support_ratio{0.0};
    double duration{0.0}; ///< t*

    /// gamma_i(t): 1 when contact i is on the ground.
    bool active(int contact, double t) const;
    /// Foothold whose window contains t, or nullptr during swing.
    const Foothold* current(int contact, double t) const;
    /// First foothold of the contact that starts at or after t, or nullptr.
    const Foothold* next(int contact, double t) const;
    /// The foothold the contact last left or currently occupies (the initial one before any step).
    const Foothold& latest(int contact, double t) const;
    /// Foothold in use at t, or the upcoming landing during swing.
    const Foothold& target(int contact, double t) const;
};

struct StepPlanOptions
{
    double step_width{0.2}; ///< lateral distance between the sole centers [m]
    double heading_change{0.0}; ///< yaw added by every step [rad]; non-zero gives an arc
};

/// Alternating footsteps (left first) along a straight line or arc.
///
/// Step k moves the swing foot one step_length ahead of its previous foothold,
/// landing half a step ahead of the stance foot. Every step period is a
/// double-support phase followed by single support; a final double-support
/// period closes the plan, so t* = (n_steps + 1) * step_duration.
/// Throws std::invalid_argument on non-positive durations or n_steps < 1.
ContactSchedule make_schedule(double step_length, double step_duration, int n_steps,
                              double double_support_ratio, const StepPlanOptions& options = {});

/// Both feet on the ground at the initial footholds for the whole duration (may be zero).
ContactSchedule make_standing_schedule(double duration, double step_width = 0.2);

/// Nominal ZMP and LIPM-consistent CoM plan sampled on a uniform grid.
class NominalPlan
{
public:
    NominalPlan(const ContactSchedule& schedule, double com_height, double gravity, double dt);

    Eigen::Vector2d zmp(double t) const;
    Eigen::Vector2d com(double t) const;
    Eigen::Vector2d com_velocity(double t) const;
    double heading(double t) const;
    double com_height() const { return m_height; }
    double dt() const { return m_dt; }

private:
    Eigen::Vector2d sample(const std::vector<Eigen::Vector2d>& series, double t) const;

    double m_dt;
    double m_height;
    std::vector<Eigen::Vector2d> m_zmp;
    std::vector<Eigen::Vector2d> m_com;
    std::vector<Eigen::Vector2d> m_com_velocity;
    std::vector<double> m_heading;
};

} // namespace gaintune
