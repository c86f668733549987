use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The per-round local training window left over after broadcasting,
    /// uploading, synthesis and downloading is not positive.
    #[error("infeasible schedule: local training time {t_loc_s:.6e} s is not positive")]
    InfeasibleSchedule { t_loc_s: f64 },

    /// Energy left for uploading is not positive for `device`.
    #[error("device {device} has no energy left for uploading (q_max = {q_max_w:.6e} W)")]
    EnergyInfeasible { device: usize, q_max_w: f64 },

    #[error("instance infeasible: {0}")]
    InstanceInfeasible(String),

    #[error("oracle refused: {0}")]
    OracleRefused(String),
}
