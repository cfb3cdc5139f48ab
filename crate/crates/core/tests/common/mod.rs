#![allow(dead_code)]

use lota_core::worldsim::{AgentSpec, ObjectSpec, Property, SceneSpec, ZoneSpec};

pub fn obj(id: &str, class: &str, props: &[Property]) -> ObjectSpec {
    ObjectSpec {
        id: id.into(),
        class_name: class.into(),
        properties: props.to_vec(),
        states: vec![],
        on: None,
        inside: None,
        zone: None,
        basin: None,
    }
}

pub fn at(mut o: ObjectSpec, zone: &str) -> ObjectSpec {
    o.zone = Some(zone.into());
    o
}

pub fn on(mut o: ObjectSpec, parent: &str) -> ObjectSpec {
    o.on = Some(parent.into());
    o
}

pub fn inside(mut o: ObjectSpec, parent: &str) -> ObjectSpec {
    o.inside = Some(parent.into());
    o
}

/// A kitchen with every device kind, two apples and a knife.
pub fn kitchen() -> SceneSpec {
    use Property::*;
    let mut faucet = at(
        obj("faucet_1", "faucet", &[Toggleable, WaterSource]),
        "sink",
    );
    faucet.basin = Some("sink_1".into());
    SceneSpec {
        zones: vec![
            ZoneSpec {
                id: "counter".into(),
                x: 0,
                y: 0,
            },
            ZoneSpec {
                id: "sink".into(),
                x: 1,
                y: 0,
            },
            ZoneSpec {
                id: "fridge".into(),
                x: 3,
                y: 0,
            },
            ZoneSpec {
                id: "table".into(),
                x: 2,
                y: 4,
            },
            ZoneSpec {
                id: "desk".into(),
                x: 6,
                y: 6,
            },
        ],
        objects: vec![
            at(obj("counter_1", "counter top", &[Receptacle]), "counter"),
            at(obj("sink_1", "sink", &[Receptacle]), "sink"),
            faucet,
            at(
                obj(
                    "fridge_1",
                    "fridge",
                    &[Receptacle, Container, Openable, ColdSource],
                ),
                "fridge",
            ),
            on(
                obj(
                    "microwave_1",
                    "microwave",
                    &[Receptacle, Container, Openable, Toggleable, HeatSource],
                ),
                "counter_1",
            ),
            at(
                obj("cabinet_1", "cabinet", &[Receptacle, Container, Openable]),
                "counter",
            ),
            at(obj("table_1", "dining table", &[Receptacle]), "table"),
            at(obj("lamp_1", "desk lamp", &[Toggleable]), "desk"),
            on(
                obj("apple_1", "apple", &[Pickupable, Sliceable]),
                "counter_1",
            ),
            inside(
                obj("apple_2", "apple", &[Pickupable, Sliceable]),
                "fridge_1",
            ),
            on(obj("knife_1", "butter knife", &[Pickupable]), "table_1"),
            inside(
                obj("mug_1", "mug", &[Pickupable, Receptacle, Container]),
                "cabinet_1",
            ),
            on(obj("potato_1", "potato", &[Pickupable]), "sink_1"),
        ],
        agent: AgentSpec {
            zone: "table".into(),
            capacity: None,
        },
    }
}
