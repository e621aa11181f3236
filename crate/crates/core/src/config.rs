//! System configuration. Values are given in dB/dBm and converted to linear
//! units by the accessor methods.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canceller::CancellerSpec;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::metrics::HardwareProfile;
use crate::optimizer::OptimizerConfig;
use crate::units::{db_to_linear, dbm_to_mw, pathloss_to_gain, tau_from_db};

/// How the half-duplex reference throughput is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HdBaseline {
    /// Dominant singular vectors of the estimated channel at full power.
    #[default]
    MatchedFilter,
    /// The precoder optimizer run on the link with SI removed.
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub m_rx: usize,
    pub p_max_dbm: f64,
    pub noise_dbm: f64,
    /// Per-antenna residual SI target.
    pub epsilon_dbm: f64,
    pub pathloss_comm_db: f64,
    pub pathloss_si_db: f64,
    pub k_factor_db: f64,
    pub beta_db: f64,
    /// CSI accuracy of a single solve.
    pub tau_db: f64,
    pub tau_grid: Vec<f64>,
    pub n_tap: usize,
    pub amp_imperf_db: f64,
    pub phase_imperf_deg: f64,
    /// Array element spacing in wavelengths.
    pub spacing: f64,
    pub optimizer: OptimizerConfig,
    pub trials: usize,
    pub master_seed: u64,
    pub hd_baseline: HdBaseline,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_tx: 4,
            m_rx: 4,
            p_max_dbm: 20.0,
            noise_dbm: -90.0,
            epsilon_dbm: -47.0,
            pathloss_comm_db: 110.0,
            pathloss_si_db: 40.0,
            k_factor_db: 35.0,
            beta_db: -50.0,
            tau_db: -40.0,
            tau_grid: vec![-40.0, -35.0, -30.0, -25.0, -20.0, -15.0],
            n_tap: 8,
            amp_imperf_db: 0.01,
            phase_imperf_deg: 0.065,
            spacing: 0.5,
            optimizer: OptimizerConfig::default(),
            trials: 100,
            master_seed: 0,
            hd_baseline: HdBaseline::MatchedFilter,
        }
    }
}

fn invalid(field: &'static str, expected: &'static str, got: impl ToString) -> Error {
    Error::InvalidConfig { field, expected, got: got.to_string() }
}

impl SystemConfig {
    /// Parses JSON. Blank input yields the defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = if text.trim().is_empty() {
            SystemConfig::default()
        } else {
            serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64| x.is_finite();
        if self.n_tx == 0 {
            return Err(invalid("n_tx", "integer >= 1", self.n_tx));
        }
        if self.m_rx == 0 {
            return Err(invalid("m_rx", "integer >= 1", self.m_rx));
        }
        for (field, v) in [
            ("p_max_dbm", self.p_max_dbm),
            ("noise_dbm", self.noise_dbm),
            ("epsilon_dbm", self.epsilon_dbm),
            ("pathloss_comm_db", self.pathloss_comm_db),
            ("pathloss_si_db", self.pathloss_si_db),
            ("k_factor_db", self.k_factor_db),
        ] {
            if !finite(v) {
                return Err(invalid(field, "finite dB value", v));
            }
        }
        if !(self.beta_db.is_finite() || self.beta_db == f64::NEG_INFINITY) {
            return Err(invalid("beta_db", "finite dB value", self.beta_db));
        }
        if self.tau_db.is_nan() || self.tau_db > 0.0 {
            return Err(invalid("tau_db", "dB value <= 0", self.tau_db));
        }
        if self.tau_grid.is_empty() {
            return Err(invalid("tau_grid", "non-empty list", "[]"));
        }
        if let Some(t) = self.tau_grid.iter().find(|t| t.is_nan() || **t > 0.0) {
            return Err(invalid("tau_grid", "dB values <= 0", t));
        }
        if self.n_tap == 0 || self.n_tap > self.n_tx * self.m_rx {
            return Err(invalid("n_tap", "integer in [1, m_rx * n_tx]", self.n_tap));
        }
        if !(self.amp_imperf_db >= 0.0 && finite(self.amp_imperf_db)) {
            return Err(invalid("amp_imperf_db", "finite half-width >= 0", self.amp_imperf_db));
        }
        if !(self.phase_imperf_deg >= 0.0 && finite(self.phase_imperf_deg)) {
            return Err(invalid("phase_imperf_deg", "finite half-width >= 0", self.phase_imperf_deg));
        }
        if !(self.spacing > 0.0 && finite(self.spacing)) {
            return Err(invalid("spacing", "positive real", self.spacing));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "integer >= 1", self.trials));
        }
        self.optimizer.validate()
    }

    pub fn power_budget_mw(&self) -> f64 {
        dbm_to_mw(self.p_max_dbm)
    }

    pub fn si_target_mw(&self) -> f64 {
        dbm_to_mw(self.epsilon_dbm)
    }

    pub fn hardware(&self) -> Result<HardwareProfile> {
        HardwareProfile::new(db_to_linear(self.beta_db), dbm_to_mw(self.noise_dbm))
    }

    pub fn canceller_spec(&self) -> CancellerSpec {
        CancellerSpec {
            n_tap: self.n_tap,
            amp_imperf_db: self.amp_imperf_db,
            phase_imperf_deg: self.phase_imperf_deg,
        }
    }

    /// Channel parameters at CSI accuracy `tau_db` (shared by the
    /// communication and SI estimates).
    pub fn channel_params(&self, tau_db: f64) -> ChannelParams {
        let tau = tau_from_db(tau_db);
        ChannelParams {
            n_tx: self.n_tx,
            m_rx: self.m_rx,
            spacing: self.spacing,
            q_comm: pathloss_to_gain(self.pathloss_comm_db),
            q_si: pathloss_to_gain(self.pathloss_si_db),
            kappa: db_to_linear(self.k_factor_db),
            tau_comm: tau,
            tau_si: tau,
        }
    }
}

pub fn parse_config(path: &Path) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    SystemConfig::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_default() {
        assert_eq!(SystemConfig::from_json_str("").unwrap(), SystemConfig::default());
        assert_eq!(SystemConfig::from_json_str("  \n").unwrap(), SystemConfig::default());
        assert_eq!(SystemConfig::from_json_str("{}").unwrap(), SystemConfig::default());
    }

    #[test]
    fn defaults_in_linear_units() {
        let c = SystemConfig::default();
        assert!((c.power_budget_mw() - 100.0).abs() < 1e-12);
        let hw = c.hardware().unwrap();
        assert!((hw.noise_power - 1e-9).abs() < 1e-24);
        assert!((hw.beta - 1e-5).abs() < 1e-20);
        let p = c.channel_params(-40.0);
        assert!((p.q_comm - 1e-11).abs() < 1e-26);
        assert!((p.q_si - 1e-4).abs() < 1e-19);
        assert!((p.kappa - 10f64.powf(3.5)).abs() < 1e-9);
        assert!((p.tau_comm - 0.01).abs() < 1e-15);
        assert!((c.si_target_mw() - 10f64.powf(-4.7)).abs() < 1e-18);
    }

    #[test]
    fn n_tap_too_large_names_field() {
        let err = SystemConfig::from_json_str(r#"{"n_tap": 17}"#).unwrap_err();
        match err {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "n_tap"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn two_point_grid() {
        let c = SystemConfig::from_json_str(r#"{"tau_grid": [-40, -15]}"#).unwrap();
        assert_eq!(c.tau_grid, vec![-40.0, -15.0]);
    }

    #[test]
    fn bad_nu_and_unknown_field() {
        let err = SystemConfig::from_json_str(r#"{"optimizer": {"armijo_nu": 1.5}}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { field: "optimizer.armijo_nu", .. }));
        assert!(matches!(SystemConfig::from_json_str(r#"{"n_taps": 3}"#), Err(Error::ConfigParse(_))));
        assert!(matches!(SystemConfig::from_json_str("{"), Err(Error::ConfigParse(_))));
    }

    #[test]
    fn round_trip() {
        let c = SystemConfig { master_seed: 17, hd_baseline: HdBaseline::Optimized, ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SystemConfig::from_json_str(&text).unwrap(), c);
    }
}
