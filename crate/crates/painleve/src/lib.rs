//! Dynamics of a rigid rod sliding on a speed-independent frictional
//! surface, with a compliant normal contact, in the regime where the
//! classical rigid-body equations break down.
//!
//! For large friction a rod sliding tip-down can reach configurations where
//! the rigid-contact problem admits no consistent normal force, or several.
//! Regularizing the contact with a stiff spring and damper resolves the
//! paradox dynamically, at a price: through such configurations the rod can
//! be thrown off the surface by a burst of normal force even when it arrived
//! grazing, with no approach velocity. The episode survives the rigid limit
//! as an impact law without a collision.
//!
//! The crate provides:
//!
//! - [`contact`]: branch coefficients of the sliding rod, regime
//!   classification, and the inclination band where the paradox lives;
//! - [`compliance`]: the contact force law and its stiffness scaling;
//! - [`ode`]: an explicit embedded Runge-Kutta integrator with dense output
//!   and root-resolved event location, used by everything downstream;
//! - [`dynamics`]: the vector fields of every contact mode, in both the
//!   outer time scale and the stretched layer scale;
//! - [`hybrid`]: the event-driven simulator that switches between modes;
//! - [`iwc`]: the closed-form impact map (restitution, stick duration,
//!   post-impact state, capture separatrix) and an independent numerical
//!   route through the same layer equations that cross-validates it;
//! - [`csv_io`]: plain-text output of trajectories and event logs.
//!
//! # Example
//!
//! ```
//! use painleve::contact::{BodyParams, ClassicalRod};
//! use painleve::compliance::{Compliance, ComplianceParams};
//! use painleve::hybrid::{simulate, HybridState, IntegrationConfig};
//! use painleve::iwc;
//!
//! let body = ClassicalRod::new(BodyParams::new(3.0, 1.4).unwrap());
//!
//! // closed-form restitution at a paradoxical inclination
//! let lin = iwc::linearization(&body, 1.0).unwrap();
//! let e = iwc::restitution(&lin, 1.0).unwrap();
//! assert!(e > 0.0 && e < 0.1);
//!
//! // the same episode simulated with a stiff compliant contact
//! let comp = Compliance::linear(ComplianceParams::new(1e-3, 1.0).unwrap());
//! let init = HybridState { t: 0.0, y: 0.0, w: -1e-3, theta: 1.0, phi: 0.5, v: 1.0, x: 0.0 };
//! let traj = simulate(&body, &comp, init, 0.02, &IntegrationConfig::default()).unwrap();
//! let lift = traj.final_state;
//! assert!((lift.w - e).abs() < 0.3 * e || lift.y > 0.0);
//! ```

pub mod compliance;
pub mod contact;
pub mod csv_io;
pub mod dynamics;
pub mod hybrid;
pub mod iwc;
pub mod ode;

pub use compliance::{Compliance, ComplianceError, ComplianceParams, LinearLaw};
pub use contact::{
    classify_regime, mu_critical, sliding_coeffs, theta_range, BodyCoefficients, BodyParams,
    ClassicalRod, Coeffs, ContactModelError, RegimeLabel, SlidingCoeffs, SlipBranch,
};
pub use hybrid::{
    simulate, Event, EventKind, HybridError, HybridState, IntegrationConfig, Mode, Trajectory,
};
pub use iwc::{
    impact_map, impact_map_numeric, linearization, restitution, ContactLinearization, ImpactMap,
    IwcError, NumericImpactMap,
};
pub use ode::{OdeError, StepControl};
