//! Decentralized squad micromanagement on a small grid skirmish.
//!
//! [`world`] simulates the battle, [`obs_text`] renders each agent's view,
//! [`comms`] relays sightings between allies in line of sight, [`skills`]
//! holds the scored tactic library, [`planner`] runs each agent's decision
//! loop, and [`harness`] drives seeded experiments and replays.

pub mod comms;
pub mod geom;
pub mod harness;
pub mod obs_text;
pub mod planner;
pub mod skills;
pub mod world;
