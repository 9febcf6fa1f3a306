//! Conversion between process models and BPMN 2.0 XML.

mod export;
mod import;
mod rebuild;

use thiserror::Error;

use crate::model::StructuralDefect;

pub use export::export_xml;
pub use import::{import_xml, ImportWarning, ImportedGraph, NodeDetail};
pub use rebuild::graph_to_model;

pub const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
pub const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";
/// Namespace of the role and object attributes written on tasks.
pub const MAO_NS: &str = "urn:mao:bpmn-text";
pub const EXTENSION: &str = "bpmn";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("model has structural defects: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Defective(Vec<StructuralDefect>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImportError {
    #[error("not well-formed XML: {0}")]
    Xml(String),
    #[error("the document has no process element")]
    NoProcess,
    #[error("the process has no start event and no element without incoming flow")]
    NoStart,
    #[error("the process has no end event and no element without outgoing flow")]
    NoEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RebuildError {
    #[error("the graph is not block-structured at `{node}`: {reason}")]
    NonBlockStructured { node: String, reason: String },
}

/// Imports XML and rebuilds a block-structured model from it.
pub fn xml_to_model(xml: &str) -> Result<(crate::model::ProcessModel, Vec<String>), ConvertError> {
    let imported = import_xml(xml)?;
    let (model, mut notes) = graph_to_model(&imported)?;
    let mut all: Vec<String> = imported
        .warnings
        .iter()
        .map(|w| match &w.id {
            Some(id) => format!("{} `{id}`: {}", w.element, w.message),
            None => format!("{}: {}", w.element, w.message),
        })
        .collect();
    all.append(&mut notes);
    Ok((model, all))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error(transparent)]
    Import(#[from] ImportError),
    #[error(transparent)]
    Rebuild(#[from] RebuildError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{flatten, FlatKind};
    use crate::dsl::parse;

    const XOR: &str = r#"<process name="p"><exclusiveGateway id="g"><branch condition="big"><activity role="r" action="A" id="a"/></branch><branch condition="small"><activity role="r" action="B" id="b"/></branch></exclusiveGateway></process>"#;

    #[test]
    fn single_activity_counts() {
        let m = parse(r#"<process name="p"><activity role="r" action="x" id="a1"/></process>"#).unwrap();
        let xml = export_xml(&m).unwrap();
        assert_eq!(xml.matches("<task ").count(), 1);
        assert_eq!(xml.matches("<startEvent ").count(), 1);
        assert_eq!(xml.matches("<endEvent ").count(), 1);
        assert_eq!(xml.matches("<sequenceFlow ").count(), 2);
        assert!(!xml.contains("BPMNDiagram"));
    }

    #[test]
    fn exclusive_gateway_counts() {
        let xml = export_xml(&parse(XOR).unwrap()).unwrap();
        assert_eq!(xml.matches("<exclusiveGateway ").count(), 2);
        assert_eq!(xml.matches("<conditionExpression ").count(), 2);
    }

    #[test]
    fn round_trip_keeps_graph_and_model() {
        let m = parse(XOR).unwrap();
        let imported = import_xml(&export_xml(&m).unwrap()).unwrap();
        assert!(imported.warnings.is_empty(), "{:?}", imported.warnings);
        assert_eq!(imported.graph, flatten(&m));
        let (back, notes) = graph_to_model(&imported).unwrap();
        assert!(notes.is_empty());
        assert_eq!(back, m);
    }

    #[test]
    fn defective_models_are_refused() {
        let mut m = parse(XOR).unwrap();
        if let crate::model::Node::Gateway(g) = &mut m.nodes[0] {
            g.branches.pop();
        }
        assert!(matches!(export_xml(&m), Err(ExportError::Defective(_))));
    }

    #[test]
    fn message_flow_is_skipped_with_warning() {
        let xml = r#"<?xml version="1.0"?>
<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL">
  <bpmn:collaboration id="c">
    <bpmn:participant id="p1" processRef="P"/>
    <bpmn:messageFlow id="m1" sourceRef="t1" targetRef="x"/>
  </bpmn:collaboration>
  <bpmn:process id="P">
    <bpmn:startEvent id="s"/>
    <bpmn:userTask id="t1" name="Check Order"/>
    <bpmn:endEvent id="e"/>
    <bpmn:sequenceFlow id="f1" sourceRef="s" targetRef="t1"/>
    <bpmn:sequenceFlow id="f2" sourceRef="t1" targetRef="e"/>
  </bpmn:process>
</bpmn:definitions>"#;
        let g = import_xml(xml).unwrap();
        assert_eq!(g.warnings.len(), 1, "{:?}", g.warnings);
        assert_eq!(g.warnings[0].element, "messageFlow");
        assert_eq!(g.graph.nodes.len(), 3);
        assert_eq!(g.graph.edges.len(), 2);
        assert_eq!(g.graph.node("t1").unwrap().kind, FlatKind::Activity("check order".into()));
    }

    #[test]
    fn missing_process_is_an_error() {
        assert_eq!(
            import_xml(r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"/>"#),
            Err(ImportError::NoProcess)
        );
        assert!(matches!(import_xml("<definitions>"), Err(ImportError::Xml(_))));
    }

    #[test]
    fn intermediate_events_are_contracted() {
        let xml = r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"><process id="P">
            <startEvent id="s"/><task id="a" name="A"/><intermediateCatchEvent id="w"/><task id="b" name="B"/><endEvent id="e"/>
            <sequenceFlow id="1" sourceRef="s" targetRef="a"/><sequenceFlow id="2" sourceRef="a" targetRef="w"/>
            <sequenceFlow id="3" sourceRef="w" targetRef="b"/><sequenceFlow id="4" sourceRef="b" targetRef="e"/>
        </process></definitions>"#;
        let g = import_xml(xml).unwrap();
        assert_eq!(g.warnings.len(), 1);
        assert!(g.graph.edges.contains(&("a".into(), "b".into())));
        assert_eq!(g.graph.edges.len(), 3);
    }

    #[test]
    fn several_start_events_are_merged() {
        let xml = r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"><process id="P">
            <startEvent id="s1"/><startEvent id="s2"/><task id="a" name="A"/><endEvent id="e"/>
            <sequenceFlow id="1" sourceRef="s1" targetRef="a"/><sequenceFlow id="2" sourceRef="s2" targetRef="a"/>
            <sequenceFlow id="3" sourceRef="a" targetRef="e"/>
        </process></definitions>"#;
        let g = import_xml(xml).unwrap();
        g.graph.check().unwrap();
        assert_eq!(g.graph.edges.len(), 2);
        assert_eq!(g.warnings.len(), 1);
    }

    #[test]
    fn cycles_are_not_block_structured() {
        let xml = r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"><process id="P">
            <startEvent id="s"/><exclusiveGateway id="j"/><task id="a" name="A"/><exclusiveGateway id="x"/><endEvent id="e"/>
            <sequenceFlow id="1" sourceRef="s" targetRef="j"/><sequenceFlow id="2" sourceRef="j" targetRef="a"/>
            <sequenceFlow id="3" sourceRef="a" targetRef="x"/><sequenceFlow id="4" sourceRef="x" targetRef="j"/>
            <sequenceFlow id="5" sourceRef="x" targetRef="e"/>
        </process></definitions>"#;
        assert!(matches!(xml_to_model(xml), Err(ConvertError::Rebuild(_))));
    }
}
