//! Present-value whole-life costing of interventions: capital expenditure
//! with professional fees, discounted annual/periodic/one-off operational
//! items, and end-of-life decommissioning. Built-in schedules carry the
//! published UK rates for permeable paving, rain gardens and detention
//! basins.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A recurring cost firing every `period_years`. Items flagged
/// `skip_when_major` do not fire in years when an unflagged (major) periodic
/// item of the same schedule fires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicItem {
    pub period_years: u32,
    pub cost: f64,
    /// Cost is per unit quantity when true, a fixed amount per feature
    /// otherwise.
    pub per_unit: bool,
    #[serde(default)]
    pub skip_when_major: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneOffItem {
    pub year: u32,
    pub cost: f64,
    pub per_unit: bool,
}

/// Whole-life cost schedule for one intervention kind. Quantities are in the
/// kind's unit basis (m² of surface or m³ of excavated volume).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSchedule {
    /// Base installation cost, £ per unit quantity.
    pub base_rate: f64,
    /// Professional fee fraction applied to the base cost.
    pub fee_fraction: f64,
    /// Annual maintenance rates, £ per unit per year.
    #[serde(default)]
    pub annual_items: Vec<f64>,
    #[serde(default)]
    pub periodic_items: Vec<PeriodicItem>,
    #[serde(default)]
    pub oneoff_items: Vec<OneOffItem>,
    /// Fraction of the base installation cost payable at end of life.
    pub decommission_fraction: f64,
    /// Annual discount rate.
    pub discount_rate: f64,
    pub lifespan_years: u32,
}

impl CostSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount_rate > 0.0 && self.discount_rate < 1.0) {
            return Err(Error::input(format!(
                "discount rate must lie in (0, 1), got {}",
                self.discount_rate
            )));
        }
        if self.lifespan_years == 0 {
            return Err(Error::input("lifespan must be at least one year"));
        }
        let rates_ok = self.base_rate >= 0.0
            && self.fee_fraction >= 0.0
            && self.decommission_fraction >= 0.0
            && self.annual_items.iter().all(|&r| r >= 0.0)
            && self.periodic_items.iter().all(|i| i.cost >= 0.0 && i.period_years > 0)
            && self.oneoff_items.iter().all(|i| i.cost >= 0.0);
        if !rates_ok {
            return Err(Error::input("cost schedule rates must be non-negative"));
        }
        Ok(())
    }

    /// Years within the lifespan in which any major (unflagged) periodic
    /// item fires.
    fn major_years(&self) -> Vec<u32> {
        let mut years: Vec<u32> = self
            .periodic_items
            .iter()
            .filter(|i| !i.skip_when_major)
            .flat_map(|i| (1..=self.lifespan_years / i.period_years).map(move |k| k * i.period_years))
            .collect();
        years.sort_unstable();
        years.dedup();
        years
    }

    /// Firing years for one periodic item, honouring the major-year skip.
    pub fn firing_years(&self, item: &PeriodicItem) -> Vec<u32> {
        let majors = self.major_years();
        (1..=self.lifespan_years / item.period_years)
            .map(|k| k * item.period_years)
            .filter(|y| !(item.skip_when_major && majors.binary_search(y).is_ok()))
            .collect()
    }
}

/// Present-value whole-life cost of `quantity` units under the schedule:
/// fee-loaded capital cost plus every future outflow discounted to year
/// zero, with decommissioning in the final year.
///
/// Annual items use the closed-form annuity factor; periodic and one-off
/// items are discounted at their individual firing years.
pub fn whole_life_cost(schedule: &CostSchedule, quantity: f64) -> Result<f64> {
    if !(quantity >= 0.0) {
        return Err(Error::input(format!("quantity must be non-negative, got {quantity}")));
    }
    schedule.validate()?;
    let r = schedule.discount_rate;
    let t_end = schedule.lifespan_years;
    let capex = schedule.base_rate * (1.0 + schedule.fee_fraction) * quantity;

    // annuity factor (1 - (1+r)^-T) / r covers the constant annual items
    let annuity = (1.0 - (1.0 + r).powi(-(t_end as i32))) / r;
    let annual: f64 = schedule.annual_items.iter().sum::<f64>() * quantity * annuity;

    let mut periodic = 0.0;
    for item in &schedule.periodic_items {
        let amount = if item.per_unit { item.cost * quantity } else { item.cost };
        for year in schedule.firing_years(item) {
            periodic += amount * (1.0 + r).powi(-(year as i32));
        }
    }

    let mut oneoff = 0.0;
    for item in &schedule.oneoff_items {
        if item.year >= 1 && item.year <= t_end {
            let amount = if item.per_unit { item.cost * quantity } else { item.cost };
            oneoff += amount * (1.0 + r).powi(-(item.year as i32));
        }
    }

    let decommission = schedule.decommission_fraction
        * schedule.base_rate
        * quantity
        * (1.0 + r).powi(-(t_end as i32));

    Ok(capex + annual + periodic + oneoff + decommission)
}

/// Permeable paving, £ per m² of converted surface: £90 base with a 12% fee,
/// £1.50/m³ annual upkeep on a 0.15 m³/m² attenuation volume, a £10/m² major
/// refurbishment at year 25 and 38.5% decommissioning at year 50, discounted
/// at 3.5%.
pub fn permeable_paving_schedule() -> CostSchedule {
    CostSchedule {
        base_rate: 90.0,
        fee_fraction: 0.12,
        annual_items: vec![1.50 * 0.15],
        periodic_items: vec![],
        oneoff_items: vec![OneOffItem { year: 25, cost: 10.0, per_unit: true }],
        decommission_fraction: 0.385,
        discount_rate: 0.035,
        lifespan_years: 50,
    }
}

/// Detention basins, £ per m³ of excavated volume, plus fixed per-basin
/// minor (3-yearly, £840, skipped in major years) and major (10-yearly,
/// £8,400) maintenance.
pub fn detention_basin_schedule() -> CostSchedule {
    CostSchedule {
        base_rate: 33.6,
        fee_fraction: 0.12,
        annual_items: vec![1.14],
        periodic_items: vec![
            PeriodicItem { period_years: 3, cost: 840.0, per_unit: false, skip_when_major: true },
            PeriodicItem { period_years: 10, cost: 8400.0, per_unit: false, skip_when_major: false },
        ],
        oneoff_items: vec![],
        decommission_fraction: 0.385,
        discount_rate: 0.035,
        lifespan_years: 50,
    }
}

/// Rain gardens, £ per m² of planted area: £250 base with a 12% fee, £2/m²
/// annual gardening and a £50/m² replanting every ten years.
pub fn rain_garden_schedule() -> CostSchedule {
    CostSchedule {
        base_rate: 250.0,
        fee_fraction: 0.12,
        annual_items: vec![2.0],
        periodic_items: vec![PeriodicItem {
            period_years: 10,
            cost: 50.0,
            per_unit: true,
            skip_when_major: false,
        }],
        oneoff_items: vec![],
        decommission_fraction: 0.385,
        discount_rate: 0.035,
        lifespan_years: 50,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: assemble the explicit year-by-year cash-flow
    /// table and discount row by row.
    fn cash_flow_table_oracle(s: &CostSchedule, quantity: f64) -> f64 {
        let r = s.discount_rate;
        let mut total = s.base_rate * (1.0 + s.fee_fraction) * quantity;
        for t in 1..=s.lifespan_years {
            let mut outflow = 0.0;
            for &rate in &s.annual_items {
                outflow += rate * quantity;
            }
            let major_fires = s
                .periodic_items
                .iter()
                .any(|i| !i.skip_when_major && t % i.period_years == 0);
            for item in &s.periodic_items {
                if t % item.period_years != 0 {
                    continue;
                }
                if item.skip_when_major && major_fires {
                    continue;
                }
                outflow += if item.per_unit { item.cost * quantity } else { item.cost };
            }
            for item in &s.oneoff_items {
                if item.year == t {
                    outflow += if item.per_unit { item.cost * quantity } else { item.cost };
                }
            }
            if t == s.lifespan_years {
                outflow += s.decommission_fraction * s.base_rate * quantity;
            }
            total += outflow / (1.0 + r).powf(t as f64);
        }
        total
    }

    #[test]
    fn paving_unit_cost_matches_cash_flow_oracle() {
        let s = permeable_paving_schedule();
        let wlc = whole_life_cost(&s, 1.0).unwrap();
        let oracle = cash_flow_table_oracle(&s, 1.0);
        assert!((wlc - oracle).abs() <= 1e-6 * oracle, "{wlc} vs {oracle}");
        // frozen value from the 50-row present-value table
        assert!((wlc - 116.51).abs() <= 0.05, "unit WLC {wlc}");
    }

    #[test]
    fn capex_only_schedule_is_exact() {
        let s = CostSchedule {
            base_rate: 90.0,
            fee_fraction: 0.12,
            annual_items: vec![],
            periodic_items: vec![],
            oneoff_items: vec![],
            decommission_fraction: 0.0,
            discount_rate: 0.035,
            lifespan_years: 50,
        };
        assert_eq!(whole_life_cost(&s, 1.0).unwrap(), 100.80000000000001);
        assert!((whole_life_cost(&s, 1.0).unwrap() - 90.0 * 1.12).abs() < 1e-12);
    }

    #[test]
    fn zero_quantity_costs_nothing() {
        assert_eq!(whole_life_cost(&permeable_paving_schedule(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_quantity_rejected() {
        assert!(whole_life_cost(&permeable_paving_schedule(), -1.0).is_err());
        assert!(whole_life_cost(&permeable_paving_schedule(), f64::NAN).is_err());
    }

    #[test]
    fn minor_maintenance_skips_major_years() {
        let s = detention_basin_schedule();
        let minor = &s.periodic_items[0];
        let years = s.firing_years(minor);
        // multiples of 3 up to 48, minus year 30 where the decennial major fires
        assert!(!years.contains(&30));
        assert!(years.contains(&27) && years.contains(&33) && years.contains(&48));
        assert_eq!(years.len(), 15);
        let major = &s.periodic_items[1];
        assert_eq!(s.firing_years(major), vec![10, 20, 30, 40, 50]);
    }

    #[test]
    fn basin_and_garden_schedules_match_oracle() {
        for (s, q) in [(detention_basin_schedule(), 750.0), (rain_garden_schedule(), 10.0)] {
            let wlc = whole_life_cost(&s, q).unwrap();
            let oracle = cash_flow_table_oracle(&s, q);
            assert!((wlc - oracle).abs() <= 1e-6 * oracle, "{wlc} vs {oracle}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn randomized_schedules_match_oracle(
            base in 0.0f64..500.0,
            fee in 0.0f64..0.3,
            annual in proptest::collection::vec(0.0f64..10.0, 0..3),
            minor_period in 2u32..6,
            minor_cost in 0.0f64..2000.0,
            major_period in 7u32..15,
            major_cost in 0.0f64..10000.0,
            oneoff_year in 1u32..50,
            oneoff_cost in 0.0f64..100.0,
            decom in 0.0f64..0.5,
            rate in 0.005f64..0.12,
            lifespan in 10u32..60,
            quantity in 0.0f64..5000.0,
        ) {
            let s = CostSchedule {
                base_rate: base,
                fee_fraction: fee,
                annual_items: annual,
                periodic_items: vec![
                    PeriodicItem { period_years: minor_period, cost: minor_cost, per_unit: false, skip_when_major: true },
                    PeriodicItem { period_years: major_period, cost: major_cost, per_unit: true, skip_when_major: false },
                ],
                oneoff_items: vec![OneOffItem { year: oneoff_year, cost: oneoff_cost, per_unit: true }],
                decommission_fraction: decom,
                discount_rate: rate,
                lifespan_years: lifespan,
            };
            let wlc = whole_life_cost(&s, quantity).unwrap();
            let oracle = cash_flow_table_oracle(&s, quantity);
            prop_assert!((wlc - oracle).abs() <= 1e-6 * oracle.abs().max(1.0), "{} vs {}", wlc, oracle);
        }
    }
}
